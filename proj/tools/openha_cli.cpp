// Command-line pipeline: expert data generation, labeling, dataset builds,
// VQ and policy training, evaluation, and report rendering.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "openha/expert.hpp"
#include "openha/harness.hpp"
#include "openha/pipeline.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace openha;
using pipeline::ConfigError;
using pipeline::RunConfig;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& body) {
  fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  out << body;
}

struct Ctx {
  RunConfig cfg;
  std::string hash;
  fs::path dir;  // versioned artifact directory

  fs::path at(const std::string& name) const { return dir / name; }
  void save(const std::string& name, const std::string& kind,
            const std::string& body) const {
    write_file(at(name), pipeline::artifact_header(hash, kind) + body);
  }
  std::string load(const std::string& name, const std::string& kind) const {
    auto a = pipeline::parse_artifact(read_file(at(name)));
    if (a.kind != kind) {
      throw ConfigError(name + ": expected artifact kind " + kind + ", got " +
                        a.kind);
    }
    if (a.hash != hash) {
      throw ConfigError(name + ": config hash mismatch (artifact " + a.hash +
                        ", config " + hash + ")");
    }
    return a.body;
  }
};

Ctx make_ctx(const std::string& config_path, std::uint64_t* seed_override) {
  Ctx ctx;
  ctx.cfg = config_path.empty() ? RunConfig{}
                                : pipeline::config_from_json(read_file(config_path));
  if (const char* env = std::getenv("MINEGRID_SEED")) {
    ctx.cfg.seed = std::strtoull(env, nullptr, 10);
  }
  if (seed_override) ctx.cfg.seed = *seed_override;
  ctx.hash = pipeline::config_hash(ctx.cfg);
  ctx.dir = fs::path(ctx.cfg.out_dir) /
            ("v" + std::to_string(pipeline::kToolVersion));
  return ctx;
}

std::vector<labeler::TrajectoryBundle> load_trajs(const Ctx& ctx) {
  std::istringstream in(ctx.load("trajs.jsonl", "trajectories"));
  std::vector<labeler::TrajectoryBundle> out;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(labeler::bundle_from_json(line));
  }
  return out;
}

const std::vector<std::pair<std::string, codecs::SpaceTag>> kSpecialists = {
    {"motion", codecs::SpaceTag::Motion},
    {"grounding", codecs::SpaceTag::Grounding},
    {"skill", codecs::SpaceTag::Skill},
    {"latent", codecs::SpaceTag::Latent},
};

codecs::SpaceTag specialist_space(const std::string& model) {
  for (const auto& [name, space] : kSpecialists) {
    if (name == model) return space;
  }
  throw ConfigError("unknown model: " + model);
}

codecs::CodecConfig codec_config(const RunConfig& cfg) {
  codecs::CodecConfig c;
  c.frame_cols = minegrid::kViewSize;
  c.frame_rows = minegrid::kViewSize;
  c.codebook_size = cfg.vq.codebook_size;
  return c;
}

vq::VQModel load_vq(const Ctx& ctx) {
  return vq::load_vq(ctx.load("vq.json", "vq"));
}

pipeline::LabelMap load_labels(const Ctx& ctx, const std::string& space_name) {
  return pipeline::labels_from_jsonl(
      ctx.load("labels_" + space_name + ".jsonl", "labels"),
      codec_config(ctx.cfg));
}

int cmd_gen_experts(const Ctx& ctx, int workers) {
  auto bundles = pipeline::gen_experts(ctx.cfg, workers);
  std::ostringstream body;
  for (const auto& b : bundles) body << labeler::bundle_to_json(b) << '\n';
  ctx.save("trajs.jsonl", "trajectories", body.str());
  std::cout << "wrote " << bundles.size() << " trajectories to "
            << ctx.at("trajs.jsonl").string() << '\n';
  return 0;
}

int cmd_label(const Ctx& ctx) {
  auto bundles = load_trajs(ctx);
  std::optional<vq::VQModel> vqm;
  if (fs::exists(ctx.at("vq.json"))) vqm = load_vq(ctx);
  for (const auto& [name, space] : kSpecialists) {
    if (space == codecs::SpaceTag::Latent && !vqm) continue;
    auto labels = pipeline::label_space(bundles, space, ctx.cfg.labeler,
                                        vqm ? &*vqm : nullptr);
    ctx.save("labels_" + name + ".jsonl", "labels",
             pipeline::labels_to_jsonl(labels, codec_config(ctx.cfg)));
    std::cout << "labeled " << name << '\n';
  }
  return 0;
}

int cmd_build_datasets(const Ctx& ctx) {
  auto bundles = load_trajs(ctx);
  auto trajs = pipeline::trajectories_of(bundles);
  auto d_a = labeler::build_dataset(trajs, {}, labeler::DatasetKind::Da,
                                    codecs::SpaceTag::Text);
  ctx.save("d_a.jsonl", "dataset", labeler::to_jsonl(d_a));
  for (const auto& [name, space] : kSpecialists) {
    if (!fs::exists(ctx.at("labels_" + name + ".jsonl"))) continue;
    auto labels = load_labels(ctx, name);
    ctx.save("d_A_" + name + ".jsonl", "dataset",
             labeler::to_jsonl(labeler::build_dataset(
                 trajs, labels, labeler::DatasetKind::DA, space)));
    ctx.save("d_coa_" + name + ".jsonl", "dataset",
             labeler::to_jsonl(labeler::build_dataset(
                 trajs, labels, labeler::DatasetKind::DCoA, space)));
    std::cout << "built datasets for " << name << '\n';
  }
  return 0;
}

int cmd_train_vq(const Ctx& ctx) {
  auto bundles = load_trajs(ctx);
  auto trained = pipeline::train_action_vq(bundles, ctx.cfg);
  ctx.save("vq.json", "vq", vq::save_vq(trained.model));
  std::cout << "vq trained, final loss "
            << (trained.curve.empty() ? 0.0 : trained.curve.back().mean_total)
            << '\n';
  return 0;
}

int cmd_train(const Ctx& ctx, const std::string& model, int stage) {
  auto bundles = load_trajs(ctx);
  auto trajs = pipeline::trajectories_of(bundles);
  policy::TrainConfig tc = ctx.cfg.train;
  tc.seed = ctx.cfg.seed;
  tc.stage = stage;
  const std::string stage1_file = "model_" + model + ".stage1.json";
  const std::string final_file = "model_" + model + ".json";

  if (model == "flat") {
    if (stage != 1) throw ConfigError("flat model has a single training stage");
    auto net = pipeline::train_flat(bundles, ctx.cfg);
    ctx.save(final_file, "policy", policy::save_policy(net));
    std::cout << "trained flat\n";
    return 0;
  }

  auto gather = [&](codecs::SpaceTag space)
      -> std::pair<labeler::Dataset, labeler::Dataset> {
    std::string name;
    for (const auto& [n, s] : kSpecialists) {
      if (s == space) name = n;
    }
    auto labels = load_labels(ctx, name);
    return {labeler::build_dataset(trajs, labels, labeler::DatasetKind::DA,
                                   space),
            labeler::build_dataset(trajs, labels, labeler::DatasetKind::DCoA,
                                   space)};
  };

  std::vector<labeler::Dataset> stage1_sets, stage2_sets;
  bool mixed = model == "all_in_one";
  if (mixed) {
    std::vector<labeler::Dataset> d_As, d_coas;
    for (codecs::SpaceTag space :
         {codecs::SpaceTag::Motion, codecs::SpaceTag::Grounding}) {
      auto [d_A, d_coa] = gather(space);
      d_As.push_back(std::move(d_A));
      d_coas.push_back(std::move(d_coa));
    }
    stage1_sets.push_back(labeler::merge_shuffled(d_As, ctx.cfg.seed));
    stage2_sets.push_back(labeler::merge_shuffled(d_coas, ctx.cfg.seed + 1));
  } else {
    auto [d_A, d_coa] = gather(specialist_space(model));
    stage1_sets.push_back(std::move(d_A));
    stage2_sets.push_back(std::move(d_coa));
  }
  stage1_sets.push_back(labeler::build_dataset(
      trajs, {}, labeler::DatasetKind::Da, codecs::SpaceTag::Text));

  if (stage == 1) {
    policy::PolicyConfig pc;
    pc.kind = policy::ModelKind::UnifiedCoA;
    pc.hidden = ctx.cfg.hidden;
    pc.codebook_size = ctx.cfg.vq.codebook_size;
    policy::ActionNet net(pc);
    Rng rng(ctx.cfg.seed);
    net.init(rng);
    policy::train_bc(net, stage1_sets, tc);
    ctx.save(stage1_file, "policy", policy::save_policy(net));
    std::cout << "trained " << model << " stage 1\n";
  } else if (stage == 2) {
    if (!fs::exists(ctx.at(stage1_file))) {
      throw ConfigError("stage 2 requires the stage-1 checkpoint " +
                        stage1_file);
    }
    auto net = policy::load_policy(ctx.load(stage1_file, "policy"));
    if (mixed) {
      policy::train_all_in_one(net, stage2_sets, tc);
    } else {
      policy::train_bc(net, stage2_sets, tc);
    }
    ctx.save(final_file, "policy", policy::save_policy(net));
    std::cout << "trained " << model << " stage 2\n";
  } else {
    throw ConfigError("stage must be 1 or 2");
  }
  return 0;
}

int cmd_eval(const Ctx& ctx, const std::string& model,
             const std::string& inference, int k, const std::string& space_name,
             int workers) {
  harness::InferenceMode mode = inference == "slow" ? harness::slow_mode()
                                                    : harness::fast_mode(k);
  harness::EvalConfig ecfg = ctx.cfg.eval;
  if (ecfg.tasks.empty()) ecfg.tasks = pipeline::effective_tasks(ctx.cfg);

  std::optional<policy::ActionNet> net;
  std::optional<vq::VQModel> vqm;
  harness::PolicyBundle bundle;
  if (model == "expert") {
    bundle = harness::scripted_bundle();
  } else if (model == "flat") {
    net = policy::load_policy(ctx.load("model_flat.json", "policy"));
    bundle = harness::flat_bundle(*net);
  } else {
    codecs::SpaceTag space = model == "all_in_one"
                                 ? specialist_space(space_name)
                                 : specialist_space(model);
    net = policy::load_policy(ctx.load("model_" + model + ".json", "policy"));
    const vq::VQModel* vqp = nullptr;
    if (space == codecs::SpaceTag::Latent) {
      vqm = load_vq(ctx);
      vqp = &*vqm;
    }
    bundle = harness::unified_bundle(*net, space, vqp);
  }
  std::string label = model == "all_in_one" ? model + "-" + space_name : model;
  auto rep = harness::evaluate(bundle, mode, ecfg, label, workers);
  std::string name = "eval_" + label + "_" + std::string(mode_name(mode)) +
                     ".jsonl";
  ctx.save(name, "eval", pipeline::eval_to_body(rep));
  std::cout << "wrote " << ctx.at(name).string() << '\n';
  return 0;
}

int cmd_report(const Ctx& ctx, std::vector<std::string> inputs, bool force) {
  if (inputs.empty()) {
    for (const auto& entry : fs::directory_iterator(ctx.dir)) {
      auto name = entry.path().filename().string();
      if (name.rfind("eval_", 0) == 0) inputs.push_back(entry.path().string());
    }
    std::sort(inputs.begin(), inputs.end());
  }
  if (inputs.empty()) throw ConfigError("no evaluation artifacts found");
  std::vector<harness::CategoryReport> reports;
  std::string seen_hash;
  for (const auto& path : inputs) {
    auto a = pipeline::parse_artifact(read_file(path));
    if (a.kind != "eval") throw ConfigError(path + " is not an eval artifact");
    if (seen_hash.empty()) seen_hash = a.hash;
    if (a.hash != seen_hash && !force) {
      throw ConfigError("mixed config hashes across eval artifacts; pass "
                        "--force to combine them");
    }
    reports.push_back(pipeline::eval_from_body(a.body));
  }
  auto doc = harness::render_report(reports);
  write_file(ctx.at("report.md"), doc.markdown);
  write_file(ctx.at("report.csv"), doc.csv);
  std::cout << doc.markdown;
  return 0;
}

int cmd_roundtrip_test() {
  using namespace openha::codecs;
  // Raw codec: exhaustive over the representable set.
  for (int i = 0; i < kRepresentableActionCount; ++i) {
    const EnvAction a = representable_action(i);
    if (decode_raw(encode_raw(a)) != a) {
      throw std::runtime_error("raw codec round-trip failure at index " +
                               std::to_string(i));
    }
  }
  // Text codec: random env actions.
  Rng rng(12345);
  for (int i = 0; i < 10000; ++i) {
    EnvAction a;
    for (int b = 0; b < kNumButtons; ++b) {
      a.buttons[b] = rng.next_below(5) == 0 ? 1 : 0;
    }
    if (rng.next_below(2)) a.camera_yaw = rng.next_double(-180, 180);
    if (rng.next_below(2)) a.camera_pitch = rng.next_double(-180, 180);
    const EnvAction back = parse_text(serialize_text(a));
    if (serialize_text(back) != serialize_text(a)) {
      throw std::runtime_error("text codec round-trip failure");
    }
  }
  // Abstracted grammars: serialized forms re-parse exactly.
  const CodecConfig cfg;
  for (SpaceTag space : {SpaceTag::Raw, SpaceTag::Text, SpaceTag::Motion,
                         SpaceTag::Grounding, SpaceTag::Skill, SpaceTag::Latent}) {
    for (int i = 0; i < 1000; ++i) {
      AbstractedAction a;
      switch (space) {
        case SpaceTag::Raw:
          a = RawAction{encode_raw(representable_action(
              static_cast<int>(rng.next_below(kRepresentableActionCount))))};
          break;
        case SpaceTag::Text: {
          EnvAction e;
          e.set(ButtonName::Forward, rng.next_below(2) != 0);
          e.camera_yaw = rng.next_below(2) ? rng.next_double(-180, 180) : 0.0;
          a = TextAction{serialize_text(e)};
          break;
        }
        case SpaceTag::Motion: {
          MotionAction m;
          for (int v = 0; v < kNumMotionVerbs; ++v) {
            if (rng.next_below(4) == 0) {
              m.verbs.push_back(static_cast<MotionVerb>(v));
            }
          }
          if (m.verbs.empty()) m.verbs.push_back(MotionVerb::Stop);
          a = m;
          break;
        }
        case SpaceTag::Grounding: {
          const auto verb =
              static_cast<GroundingVerb>(rng.next_below(kNumGroundingVerbs));
          a = verb == GroundingVerb::Explore
                  ? GroundingAction{GroundingVerb::Explore, "", -1, -1}
                  : GroundingAction{
                        verb, "oak_log",
                        static_cast<int>(rng.next_below(cfg.frame_cols)),
                        static_cast<int>(rng.next_below(cfg.frame_rows))};
          break;
        }
        case SpaceTag::Skill:
          a = SkillAction{
              skill_taxonomy()[rng.next_below(skill_taxonomy().size())]};
          break;
        case SpaceTag::Latent:
          a = LatentAction{static_cast<int>(rng.next_below(cfg.codebook_size))};
          break;
      }
      const std::string s = serialize_abstracted(a);
      if (parse_abstracted(s, cfg, space) != a) {
        throw std::runtime_error("grammar round-trip failure: " + s);
      }
    }
  }
  std::cout << "all codec round-trips passed\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"openha: hierarchical action-abstraction pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  app.add_option("--config", config_path, "JSON run configuration");
  auto* seed_opt = app.add_option("--seed", seed, "seed override");

  int workers = 0;
  std::string model = "flat", inference = "fast", space = "motion";
  int stage = 1, k = 8;
  bool force = false;
  std::vector<std::string> report_inputs;

  auto* c_gen = app.add_subcommand("gen-experts", "roll out scripted experts");
  c_gen->add_option("--workers", workers);
  auto* c_label = app.add_subcommand("label", "window-label trajectories");
  auto* c_build = app.add_subcommand("build-datasets", "emit D_A/D_a/D_CoA");
  auto* c_tvq = app.add_subcommand("train-vq", "train the latent tokenizer");
  auto* c_train = app.add_subcommand("train", "behavior-clone a policy");
  c_train->add_option("--model", model,
                      "flat|motion|grounding|skill|latent|all_in_one");
  c_train->add_option("--stage", stage, "curriculum stage 1|2");
  auto* c_eval = app.add_subcommand("eval", "run the benchmark");
  c_eval->add_option("--model", model, "expert|flat|specialist|all_in_one");
  c_eval->add_option("--inference", inference, "fast|slow");
  c_eval->add_option("--k", k, "fast-mode replan interval");
  c_eval->add_option("--space", space, "prompt format for all_in_one");
  c_eval->add_option("--workers", workers);
  auto* c_report = app.add_subcommand("report", "render tables from raw JSONL");
  c_report->add_option("inputs", report_inputs, "eval artifact files");
  c_report->add_flag("--force", force, "allow mixed config hashes");
  auto* c_rt = app.add_subcommand("roundtrip-test", "codec exhaustive suites");

  CLI11_PARSE(app, argc, argv);
  seed_set = seed_opt->count() > 0;

  try {
    if (c_rt->parsed()) return cmd_roundtrip_test();
    Ctx ctx = make_ctx(config_path, seed_set ? &seed : nullptr);
    if (c_gen->parsed()) return cmd_gen_experts(ctx, workers);
    if (c_label->parsed()) return cmd_label(ctx);
    if (c_build->parsed()) return cmd_build_datasets(ctx);
    if (c_tvq->parsed()) return cmd_train_vq(ctx);
    if (c_train->parsed()) return cmd_train(ctx, model, stage);
    if (c_eval->parsed()) return cmd_eval(ctx, model, inference, k, space, workers);
    if (c_report->parsed()) return cmd_report(ctx, report_inputs, force);
    return 2;
  } catch (const ConfigError& e) {
    json err{{"error", "config"}, {"message", e.what()}};
    std::cerr << err.dump() << '\n';
    return 2;
  } catch (const std::exception& e) {
    json err{{"error", "pipeline"}, {"message", e.what()}};
    std::cerr << err.dump() << '\n';
    return 1;
  }
}
