#include "openha/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "openha/expert.hpp"

namespace openha::pipeline {

using json = nlohmann::ordered_json;

namespace {

void reject_unknown(const json& j, const std::vector<std::string>& keys,
                    const std::string& where) {
  for (const auto& [k, v] : j.items()) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
      throw ConfigError("unknown config key: " + where + k);
    }
  }
}

template <typename T>
void load(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

RunConfig config_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse failure: ") + e.what());
  }
  try {
    RunConfig cfg;
    reject_unknown(j,
                   {"seed", "out_dir", "tasks", "episodes_per_task", "labeler",
                    "vq", "hidden", "train", "eval"},
                   "");
    load(j, "seed", cfg.seed);
    load(j, "out_dir", cfg.out_dir);
    load(j, "tasks", cfg.tasks);
    load(j, "episodes_per_task", cfg.episodes_per_task);
    if (j.contains("labeler")) {
      const json& l = j.at("labeler");
      reject_unknown(l,
                     {"window_k", "turn_threshold_deg", "look_threshold_deg",
                      "press_fraction"},
                     "labeler.");
      load(l, "window_k", cfg.labeler.window_k);
      load(l, "turn_threshold_deg", cfg.labeler.turn_threshold_deg);
      load(l, "look_threshold_deg", cfg.labeler.look_threshold_deg);
      load(l, "press_fraction", cfg.labeler.press_fraction);
    }
    if (j.contains("vq")) {
      const json& v = j.at("vq");
      reject_unknown(v,
                     {"window", "codebook_size", "embedding_dim",
                      "commitment_beta", "encoder_hidden", "decoder_hidden",
                      "learning_rate", "epochs", "batch_size"},
                     "vq.");
      load(v, "window", cfg.vq.window);
      load(v, "codebook_size", cfg.vq.codebook_size);
      load(v, "embedding_dim", cfg.vq.embedding_dim);
      load(v, "commitment_beta", cfg.vq.commitment_beta);
      load(v, "encoder_hidden", cfg.vq.encoder_hidden);
      load(v, "decoder_hidden", cfg.vq.decoder_hidden);
      load(v, "learning_rate", cfg.vq.learning_rate);
      load(v, "epochs", cfg.vq.epochs);
      load(v, "batch_size", cfg.vq.batch_size);
    }
    load(j, "hidden", cfg.hidden);
    if (j.contains("train")) {
      const json& t = j.at("train");
      reject_unknown(t, {"lr", "epochs", "batch"}, "train.");
      load(t, "lr", cfg.train.lr);
      load(t, "epochs", cfg.train.epochs);
      load(t, "batch", cfg.train.batch);
    }
    if (j.contains("eval")) {
      const json& e = j.at("eval");
      reject_unknown(e,
                     {"tasks", "seeds_per_task", "first_seed", "mini_tasks",
                      "mini_runs_per_task", "max_steps", "greedy"},
                     "eval.");
      load(e, "tasks", cfg.eval.tasks);
      load(e, "seeds_per_task", cfg.eval.seeds_per_task);
      load(e, "first_seed", cfg.eval.first_seed);
      load(e, "mini_tasks", cfg.eval.mini_tasks);
      load(e, "mini_runs_per_task", cfg.eval.mini_runs_per_task);
      load(e, "max_steps", cfg.eval.max_steps);
      load(e, "greedy", cfg.eval.greedy);
    }
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field failure: ") + e.what());
  }
}

std::string config_to_json(const RunConfig& cfg) {
  json j;
  j["seed"] = cfg.seed;
  j["out_dir"] = cfg.out_dir;
  j["tasks"] = cfg.tasks;
  j["episodes_per_task"] = cfg.episodes_per_task;
  j["labeler"] = {{"window_k", cfg.labeler.window_k},
                  {"turn_threshold_deg", cfg.labeler.turn_threshold_deg},
                  {"look_threshold_deg", cfg.labeler.look_threshold_deg},
                  {"press_fraction", cfg.labeler.press_fraction}};
  j["vq"] = {{"window", cfg.vq.window},
             {"codebook_size", cfg.vq.codebook_size},
             {"embedding_dim", cfg.vq.embedding_dim},
             {"commitment_beta", cfg.vq.commitment_beta},
             {"encoder_hidden", cfg.vq.encoder_hidden},
             {"decoder_hidden", cfg.vq.decoder_hidden},
             {"learning_rate", cfg.vq.learning_rate},
             {"epochs", cfg.vq.epochs},
             {"batch_size", cfg.vq.batch_size}};
  j["hidden"] = cfg.hidden;
  j["train"] = {{"lr", cfg.train.lr},
                {"epochs", cfg.train.epochs},
                {"batch", cfg.train.batch}};
  j["eval"] = {{"tasks", cfg.eval.tasks},
               {"seeds_per_task", cfg.eval.seeds_per_task},
               {"first_seed", cfg.eval.first_seed},
               {"mini_tasks", cfg.eval.mini_tasks},
               {"mini_runs_per_task", cfg.eval.mini_runs_per_task},
               {"max_steps", cfg.eval.max_steps},
               {"greedy", cfg.eval.greedy}};
  return j.dump();
}

std::string config_hash(const RunConfig& cfg) {
  return hex64(fnv1a(config_to_json(cfg)));
}

std::vector<std::string> effective_tasks(const RunConfig& cfg) {
  if (!cfg.tasks.empty()) return cfg.tasks;
  std::vector<std::string> out;
  for (const auto& t : minegrid::task_suite()) out.push_back(t.id);
  return out;
}

labeler::TrajectoryBundle expert_rollout(const minegrid::TaskSpec& task,
                                         std::uint64_t seed) {
  minegrid::Env env(task, seed);
  labeler::TrajectoryBundle b;
  b.traj.id = task.id + "-" + std::to_string(seed);
  b.traj.instruction = task.instruction;
  minegrid::Observation obs = env.reset();
  bool done = false;
  for (int t = 0; t < task.max_steps && !done; ++t) {
    const EnvAction a =
        expert::scripted_expert(task, env.agent(), env.world());
    b.visible.push_back(minegrid::visible_entities(env.agent(), env.world()));
    labeler::TrajStep st;
    st.t = t;
    st.obs = obs;
    st.a = a;
    auto res = env.step(a);
    st.events = res.events;
    done = res.success;
    obs = res.obs;
    b.traj.steps.push_back(std::move(st));
  }
  return b;
}

std::vector<labeler::TrajectoryBundle> gen_experts(const RunConfig& cfg,
                                                   int workers) {
  struct Job {
    const minegrid::TaskSpec* task;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& id : effective_tasks(cfg)) {
    const auto& task = minegrid::task_by_id(id);
    for (int e = 0; e < cfg.episodes_per_task; ++e) {
      jobs.push_back({&task, cfg.seed + static_cast<std::uint64_t>(e)});
    }
  }
  std::vector<labeler::TrajectoryBundle> out(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      out[i] = expert_rollout(*jobs[i].task, jobs[i].seed);
    }
  };
  int n = workers > 0 ? workers
                      : static_cast<int>(std::min<std::size_t>(
                            jobs.size(),
                            std::max(1u, std::thread::hardware_concurrency())));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return out;
}

std::vector<vq::ActionWindow> collect_windows(
    const std::vector<labeler::TrajectoryBundle>& bundles, int window) {
  std::vector<vq::ActionWindow> out;
  for (const auto& b : bundles) {
    for (std::size_t base = 0; base < b.traj.steps.size();
         base += static_cast<std::size_t>(window)) {
      vq::ActionWindow w;
      for (int t = 0; t < window; ++t) {
        std::size_t i = base + static_cast<std::size_t>(t);
        w.actions.push_back(i < b.traj.steps.size() ? b.traj.steps[i].a
                                                    : null_action());
      }
      out.push_back(std::move(w));
    }
  }
  return out;
}

vq::TrainedVQ train_action_vq(
    const std::vector<labeler::TrajectoryBundle>& bundles,
    const RunConfig& cfg) {
  vq::VQConfig vcfg = cfg.vq;
  vcfg.seed = cfg.seed;
  return vq::train_vq(collect_windows(bundles, vcfg.window), vcfg);
}

LabelMap label_space(const std::vector<labeler::TrajectoryBundle>& bundles,
                     codecs::SpaceTag space, const labeler::LabelerConfig& cfg,
                     const vq::VQModel* vq_model) {
  LabelMap out;
  for (const auto& b : bundles) {
    std::vector<labeler::WindowLabel> labels;
    switch (space) {
      case codecs::SpaceTag::Motion:
        labels = labeler::label_motion(b.traj, cfg);
        break;
      case codecs::SpaceTag::Grounding:
        labels = labeler::label_grounding(b.traj, b.visible, cfg);
        break;
      case codecs::SpaceTag::Skill:
        labels = labeler::label_skill(b.traj, cfg);
        break;
      case codecs::SpaceTag::Latent: {
        if (!vq_model) throw ConfigError("latent labels need a trained VQ model");
        const int w = vq_model->cfg.window;
        const int n = static_cast<int>(b.traj.steps.size());
        for (int base = 0; base < n; base += w) {
          vq::ActionWindow win;
          for (int t = 0; t < w; ++t) {
            win.actions.push_back(base + t < n ? b.traj.steps[base + t].a
                                               : null_action());
          }
          labeler::WindowLabel wl;
          wl.begin = base;
          wl.end = std::min(base + w, n);
          wl.action = vq::encode_actions(*vq_model, win);
          labels.push_back(std::move(wl));
        }
        break;
      }
      default:
        throw ConfigError("unlabelable space");
    }
    out[b.traj.id] = std::move(labels);
  }
  return out;
}

std::vector<labeler::Trajectory> trajectories_of(
    const std::vector<labeler::TrajectoryBundle>& bundles) {
  std::vector<labeler::Trajectory> out;
  for (const auto& b : bundles) out.push_back(b.traj);
  return out;
}

namespace {

policy::PolicyConfig net_config(policy::ModelKind kind, const RunConfig& cfg) {
  policy::PolicyConfig pc;
  pc.kind = kind;
  pc.hidden = cfg.hidden;
  pc.codebook_size = cfg.vq.codebook_size;
  return pc;
}

policy::TrainConfig stage_cfg(const RunConfig& cfg, int stage) {
  policy::TrainConfig t = cfg.train;
  t.seed = cfg.seed;
  t.stage = stage;
  return t;
}

}  // namespace

policy::ActionNet train_flat(
    const std::vector<labeler::TrajectoryBundle>& bundles,
    const RunConfig& cfg) {
  auto trajs = trajectories_of(bundles);
  auto d_a = labeler::build_dataset(trajs, {}, labeler::DatasetKind::Da,
                                    codecs::SpaceTag::Text);
  policy::ActionNet net(net_config(policy::ModelKind::Flat, cfg));
  Rng rng(cfg.seed);
  net.init(rng);
  policy::train_bc(net, {d_a}, stage_cfg(cfg, 1));
  return net;
}

policy::ActionNet train_unified(
    const std::vector<labeler::TrajectoryBundle>& bundles,
    codecs::SpaceTag space, const LabelMap& labels, const RunConfig& cfg) {
  auto trajs = trajectories_of(bundles);
  auto d_A = labeler::build_dataset(trajs, labels, labeler::DatasetKind::DA,
                                    space);
  auto d_a = labeler::build_dataset(trajs, {}, labeler::DatasetKind::Da, space);
  auto d_coa = labeler::build_dataset(trajs, labels, labeler::DatasetKind::DCoA,
                                      space);
  policy::ActionNet net(net_config(policy::ModelKind::UnifiedCoA, cfg));
  Rng rng(cfg.seed);
  net.init(rng);
  policy::train_bc(net, {d_A, d_a}, stage_cfg(cfg, 1));
  policy::train_bc(net, {d_coa}, stage_cfg(cfg, 2));
  return net;
}

policy::ActionNet train_mixed(
    const std::vector<labeler::TrajectoryBundle>& bundles,
    const std::vector<std::pair<codecs::SpaceTag, LabelMap>>& spaces,
    const RunConfig& cfg) {
  auto trajs = trajectories_of(bundles);
  std::vector<labeler::Dataset> stage1_parts, stage2_parts;
  for (const auto& [space, labels] : spaces) {
    stage1_parts.push_back(labeler::build_dataset(
        trajs, labels, labeler::DatasetKind::DA, space));
    stage2_parts.push_back(labeler::build_dataset(
        trajs, labels, labeler::DatasetKind::DCoA, space));
  }
  auto d_a = labeler::build_dataset(trajs, {}, labeler::DatasetKind::Da,
                                    codecs::SpaceTag::Text);
  auto stage1_A = labeler::merge_shuffled(stage1_parts, cfg.seed);
  auto stage2 = labeler::merge_shuffled(stage2_parts, cfg.seed + 1);
  policy::ActionNet net(net_config(policy::ModelKind::UnifiedCoA, cfg));
  Rng rng(cfg.seed);
  net.init(rng);
  policy::train_bc(net, {stage1_A, d_a}, stage_cfg(cfg, 1));
  policy::train_all_in_one(net, {stage2}, stage_cfg(cfg, 2));
  return net;
}

std::string artifact_header(const std::string& hash, const std::string& kind) {
  json j;
  j["artifact"] = "openha";
  j["version"] = kToolVersion;
  j["config_hash"] = hash;
  j["kind"] = kind;
  return j.dump() + "\n";
}

Artifact parse_artifact(const std::string& text) {
  auto nl = text.find('\n');
  if (nl == std::string::npos) throw ConfigError("artifact missing header line");
  json j;
  try {
    j = json::parse(text.substr(0, nl));
  } catch (const json::exception&) {
    throw ConfigError("artifact header is not JSON");
  }
  if (!j.contains("artifact") || j["artifact"] != "openha" ||
      !j.contains("version") || j["version"] != kToolVersion) {
    throw ConfigError("unrecognized artifact header");
  }
  Artifact a;
  a.hash = j.at("config_hash").get<std::string>();
  a.kind = j.at("kind").get<std::string>();
  a.body = text.substr(nl + 1);
  return a;
}

std::string labels_to_jsonl(const LabelMap& labels,
                            const codecs::CodecConfig& codec_cfg) {
  std::ostringstream out;
  for (const auto& [id, ls] : labels) {
    for (const auto& l : ls) {
      json j;
      j["traj"] = id;
      j["begin"] = l.begin;
      j["end"] = l.end;
      j["space"] = std::string(codecs::space_name(codecs::tag_of(l.action)));
      j["A"] = codecs::serialize_abstracted(l.action);
      out << j.dump() << '\n';
    }
  }
  return out.str();
}

LabelMap labels_from_jsonl(const std::string& text,
                           const codecs::CodecConfig& codec_cfg) {
  LabelMap out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    labeler::WindowLabel l;
    l.begin = j.at("begin").get<int>();
    l.end = j.at("end").get<int>();
    auto space = codecs::space_from_name(j.at("space").get<std::string>());
    if (!space) throw ConfigError("unknown label space");
    l.action =
        codecs::parse_abstracted(j.at("A").get<std::string>(), codec_cfg, *space);
    out[j.at("traj").get<std::string>()].push_back(std::move(l));
  }
  return out;
}

std::string eval_to_body(const harness::CategoryReport& rep) {
  std::ostringstream out;
  json meta;
  meta["model"] = rep.model;
  meta["mode"] = rep.mode;
  out << meta.dump() << '\n';
  auto emit = [&](const std::vector<harness::EpisodeResult>& eps,
                  const char* set) {
    for (const auto& e : eps) {
      json j;
      j["set"] = set;
      j["task"] = e.task;
      j["seed"] = e.seed;
      j["success"] = e.success;
      j["steps"] = e.steps;
      j["cost"] = {{"high_level_calls", e.cost.high_level_calls},
                   {"low_level_calls", e.cost.low_level_calls}};
      out << j.dump() << '\n';
    }
  };
  emit(rep.episodes, "main");
  emit(rep.mini_episodes, "mini");
  return out.str();
}

harness::CategoryReport eval_from_body(const std::string& body) {
  std::istringstream in(body);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("eval artifact missing meta");
  json meta = json::parse(line);
  std::vector<harness::EpisodeResult> main_eps, mini_eps;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    harness::EpisodeResult e;
    e.task = j.at("task").get<std::string>();
    e.seed = j.at("seed").get<std::uint64_t>();
    e.success = j.at("success").get<bool>();
    e.steps = j.at("steps").get<int>();
    e.cost.high_level_calls = j.at("cost").at("high_level_calls").get<long>();
    e.cost.low_level_calls = j.at("cost").at("low_level_calls").get<long>();
    (j.at("set") == "mini" ? mini_eps : main_eps).push_back(std::move(e));
  }
  return harness::aggregate(meta.at("model").get<std::string>(),
                            meta.at("mode").get<std::string>(),
                            std::move(main_eps), std::move(mini_eps));
}

}  // namespace openha::pipeline
