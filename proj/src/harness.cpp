#include "openha/harness.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <mutex>
#include <cmath>
#include <set>
#include <sstream>
#include <thread>
#include <variant>

#include "json.hpp"
#include "openha/expert.hpp"
#include "openha/stats.hpp"

namespace openha::harness {

using json = nlohmann::ordered_json;
using minegrid::TaskCategory;

InferenceMode fast_mode(int replan_interval) {
  if (replan_interval < 1) throw std::invalid_argument("replan_interval < 1");
  return InferenceMode{InferenceMode::Kind::Fast, replan_interval};
}

InferenceMode slow_mode() { return InferenceMode{InferenceMode::Kind::Slow, 1}; }

std::string_view mode_name(const InferenceMode& m) {
  return m.kind == InferenceMode::Kind::Fast ? "fast" : "slow";
}

PolicyBundle scripted_bundle() {
  PolicyBundle b;
  b.scripted = true;
  return b;
}

PolicyBundle flat_bundle(const policy::ActionNet& net) {
  PolicyBundle b;
  b.low = &net;
  return b;
}

PolicyBundle hierarchical_bundle(const policy::ActionNet& high,
                                 const policy::ActionNet& low,
                                 codecs::SpaceTag space, const vq::VQModel* vq) {
  PolicyBundle b;
  b.high = &high;
  b.low = &low;
  b.space = space;
  b.vq = vq;
  return b;
}

PolicyBundle unified_bundle(const policy::ActionNet& net, codecs::SpaceTag space,
                            const vq::VQModel* vq) {
  PolicyBundle b;
  b.high = &net;
  b.low = &net;
  b.space = space;
  b.vq = vq;
  return b;
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void validate(const PolicyBundle& b, const InferenceMode& mode) {
  if (b.scripted) return;
  if (b.vq && b.space != codecs::SpaceTag::Latent) {
    throw ModeModelMismatch("vq decoder requires the latent space");
  }
  if (!b.space) {
    if (!b.low) throw ModeModelMismatch("flat bundle needs a low-level net");
    if (mode.kind == InferenceMode::Kind::Slow) {
      throw ModeModelMismatch("slow mode needs a unified CoA model");
    }
    return;
  }
  if (mode.kind == InferenceMode::Kind::Slow) {
    if (!b.high || b.high != b.low ||
        b.high->config().kind != policy::ModelKind::UnifiedCoA) {
      throw ModeModelMismatch("slow mode needs a unified CoA model");
    }
    return;
  }
  if (!b.high || (b.high->config().kind != policy::ModelKind::HighLevel &&
                  b.high->config().kind != policy::ModelKind::UnifiedCoA)) {
    throw ModeModelMismatch("fast mode needs a high-level head");
  }
  if (b.vq) return;
  if (!b.low || (b.low->config().kind != policy::ModelKind::LowLevel &&
                 b.low->config().kind != policy::ModelKind::UnifiedCoA)) {
    throw ModeModelMismatch("fast mode needs a conditioned low-level decoder");
  }
}

// Motion abstractions are object-agnostic movement commands: their execution
// path carries movement, stance, and camera only. Interaction and GUI buttons
// are masked, which is the expressiveness gap on GUI tasks.
EnvAction project_motion(const EnvAction& a) {
  EnvAction out = null_action();
  for (ButtonName b : {ButtonName::Forward, ButtonName::Back, ButtonName::Left,
                       ButtonName::Right, ButtonName::Jump, ButtonName::Sprint,
                       ButtonName::Sneak}) {
    out.set(b, a.pressed(b));
  }
  out.camera_pitch = a.camera_pitch;
  out.camera_yaw = a.camera_yaw;
  return out;
}

int latent_code(const codecs::AbstractedAction& A) {
  return std::get<codecs::LatentAction>(A).code;
}

policy::FormatPrompt high_prompt(const PolicyBundle& b) {
  if (b.high->config().kind == policy::ModelKind::HighLevel) {
    return policy::FormatPrompt{policy::PromptKind::HighLevelOnly, *b.space};
  }
  return policy::coa_prompt(*b.space);
}

}  // namespace

EpisodeResult run_episode(const PolicyBundle& bundle, const InferenceMode& mode,
                          const minegrid::TaskSpec& task, std::uint64_t seed,
                          bool greedy, int max_steps_override) {
  validate(bundle, mode);
  int max_steps = max_steps_override > 0 ? max_steps_override : task.max_steps;
  minegrid::Env env(task, seed);
  minegrid::Observation obs = env.reset();
  Rng rng(fnv1a(task.id) ^ (seed * 0x9E3779B97F4A7C15ULL) ^ 0xD1B54A32D192ED03ULL);

  EpisodeResult res;
  res.task = task.id;
  res.seed = seed;

  std::optional<codecs::AbstractedAction> A;
  std::optional<policy::LatentExecutor> exec;
  if (bundle.vq) exec.emplace(*bundle.vq);

  for (int t = 0; t < max_steps; ++t) {
    EnvAction a;
    if (bundle.scripted) {
      a = expert::scripted_expert(task, env.agent(), env.world());
    } else if (!bundle.space) {
      nn::Vec feat = policy::featurize(bundle.low->config().features, obs,
                                       task.instruction, policy::FormatPrompt{});
      a = policy::decode_low(*bundle.low, feat, std::nullopt, rng, greedy);
      ++res.cost.low_level_calls;
    } else if (mode.kind == InferenceMode::Kind::Fast) {
      if (t % mode.replan_interval == 0) {
        nn::Vec hfeat = policy::featurize(bundle.high->config().features, obs,
                                          task.instruction, high_prompt(bundle));
        A = policy::sample_abstracted(*bundle.high, hfeat, *bundle.space, rng,
                                      greedy);
        ++res.cost.high_level_calls;
      }
      if (bundle.vq) {
        a = exec->step(latent_code(*A));
      } else {
        nn::Vec lfeat =
            policy::featurize(bundle.low->config().features, obs,
                              task.instruction, policy::coa_prompt(*bundle.space));
        a = policy::decode_low(*bundle.low, lfeat, A, rng, greedy);
      }
      ++res.cost.low_level_calls;
    } else {
      nn::Vec feat =
          policy::featurize(bundle.high->config().features, obs,
                            task.instruction, policy::coa_prompt(*bundle.space));
      if (bundle.vq) {
        A = policy::sample_abstracted(*bundle.high, feat, *bundle.space, rng,
                                      greedy);
        a = exec->step(latent_code(*A));
      } else {
        policy::CoAResult r =
            policy::coa_step(*bundle.high, feat, *bundle.space, rng, greedy);
        a = r.a;
      }
      ++res.cost.high_level_calls;
      ++res.cost.low_level_calls;
    }
    if (bundle.space == codecs::SpaceTag::Motion) a = project_motion(a);
    minegrid::Env::StepResult sr = env.step(a);
    obs = sr.obs;
    if (sr.success) {
      res.success = true;
      res.steps = t + 1;
      return res;
    }
  }
  res.steps = max_steps;
  return res;
}

CategoryReport aggregate(const std::string& model, const std::string& mode,
                         std::vector<EpisodeResult> episodes,
                         std::vector<EpisodeResult> mini_episodes) {
  CategoryReport rep;
  rep.model = model;
  rep.mode = mode;
  rep.episodes = std::move(episodes);
  rep.mini_episodes = std::move(mini_episodes);

  auto per_task = [](const std::vector<EpisodeResult>& eps) {
    // task id -> (successes, episodes, total steps)
    std::map<std::string, std::array<double, 3>> m;
    for (const auto& e : eps) {
      auto& cell = m[e.task];
      cell[0] += e.success ? 1.0 : 0.0;
      cell[1] += 1.0;
      cell[2] += e.steps;
    }
    return m;
  };
  auto main_tasks = per_task(rep.episodes);
  auto mini_tasks = per_task(rep.mini_episodes);

  for (TaskCategory cat :
       {TaskCategory::Embodied, TaskCategory::GUI, TaskCategory::Combat}) {
    CategoryStats st;
    std::vector<double> srs, step_means, mini_srs;
    for (const auto& [id, cell] : main_tasks) {
      if (minegrid::task_by_id(id).category != cat) continue;
      ++st.tasks;
      srs.push_back(cell[0] / cell[1]);
      step_means.push_back(cell[2] / cell[1]);
    }
    for (const auto& [id, cell] : mini_tasks) {
      if (minegrid::task_by_id(id).category != cat) continue;
      mini_srs.push_back(cell[0] / cell[1]);
    }
    long hl = 0, ll = 0;
    double success_steps = 0.0;
    long success_n = 0;
    for (const auto& e : rep.episodes) {
      if (minegrid::task_by_id(e.task).category != cat) continue;
      ++st.episodes;
      if (e.success) {
        ++st.successes;
        success_steps += e.steps;
        ++success_n;
      }
      hl += e.cost.high_level_calls;
      ll += e.cost.low_level_calls;
    }
    st.sr_mean = stats::mean(srs);
    st.sr_std = stats::stddev(srs);
    st.steps_mean = stats::mean(step_means);
    st.steps_std = stats::stddev(step_means);
    st.steps_success_mean = success_n ? success_steps / success_n : 0.0;
    st.mini_sr_mean = stats::mean(mini_srs);
    st.mini_sr_std = stats::stddev(mini_srs);
    st.cost_ratio = hl ? static_cast<double>(ll) / static_cast<double>(hl) : 0.0;
    rep.categories[cat] = st;
  }
  return rep;
}

CategoryReport evaluate(const PolicyBundle& bundle, const InferenceMode& mode,
                        const EvalConfig& cfg, const std::string& model_label,
                        int threads) {
  if (cfg.tasks.empty()) throw std::invalid_argument("no tasks");
  if (cfg.seeds_per_task < 3) throw std::invalid_argument("seeds_per_task < 3");
  if (!cfg.mini_tasks.empty() && cfg.mini_runs_per_task < 10) {
    throw std::invalid_argument("mini runs_per_task < 10");
  }
  for (const auto& id : cfg.mini_tasks) {
    if (std::find(cfg.tasks.begin(), cfg.tasks.end(), id) == cfg.tasks.end()) {
      throw std::invalid_argument("mini task not in suite: " + id);
    }
  }
  validate(bundle, mode);

  struct Job {
    const minegrid::TaskSpec* task;
    std::uint64_t seed;
    bool mini;
  };
  std::vector<Job> jobs;
  for (const auto& id : cfg.tasks) {
    const auto& task = minegrid::task_by_id(id);
    for (int s = 0; s < cfg.seeds_per_task; ++s) {
      jobs.push_back({&task, cfg.first_seed + static_cast<std::uint64_t>(s),
                      false});
    }
  }
  for (const auto& id : cfg.mini_tasks) {
    const auto& task = minegrid::task_by_id(id);
    for (int s = 0; s < cfg.mini_runs_per_task; ++s) {
      jobs.push_back({&task, cfg.first_seed + static_cast<std::uint64_t>(s),
                      true});
    }
  }

  std::vector<EpisodeResult> out(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      try {
        out[i] = run_episode(bundle, mode, *jobs[i].task, jobs[i].seed,
                             cfg.greedy, cfg.max_steps);
      } catch (...) {
        std::lock_guard<std::mutex> lk(error_mu);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  int n_threads = threads > 0
                      ? threads
                      : static_cast<int>(std::min<std::size_t>(
                            jobs.size(),
                            std::max(1u, std::thread::hardware_concurrency())));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);

  std::vector<EpisodeResult> main_eps, mini_eps;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    (jobs[i].mini ? mini_eps : main_eps).push_back(out[i]);
  }
  return aggregate(model_label, std::string(mode_name(mode)), std::move(main_eps),
                   std::move(mini_eps));
}

std::map<TaskCategory, ComparisonCell> compare(const CategoryReport& a,
                                               const CategoryReport& b) {
  auto keys = [](const std::vector<EpisodeResult>& eps) {
    std::set<std::pair<std::string, std::uint64_t>> k;
    for (const auto& e : eps) k.insert({e.task, e.seed});
    return k;
  };
  if (keys(a.episodes) != keys(b.episodes) ||
      a.episodes.size() != b.episodes.size()) {
    throw SuiteMismatch("compared reports cover different (task, seed) sets");
  }
  std::map<TaskCategory, ComparisonCell> out;
  for (TaskCategory cat :
       {TaskCategory::Embodied, TaskCategory::GUI, TaskCategory::Combat}) {
    long xa = 0, na = 0, xb = 0, nb = 0;
    for (const auto& e : a.episodes) {
      if (minegrid::task_by_id(e.task).category != cat) continue;
      ++na;
      xa += e.success ? 1 : 0;
    }
    for (const auto& e : b.episodes) {
      if (minegrid::task_by_id(e.task).category != cat) continue;
      ++nb;
      xb += e.success ? 1 : 0;
    }
    if (na == 0) continue;
    stats::ZTestResult z = stats::two_proportion_z(xa, na, xb, nb);
    out[cat] = ComparisonCell{z.delta, z.p_value};
  }
  return out;
}

ReportDocument render_report(const std::vector<CategoryReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("no reports");
  const TaskCategory cats[] = {TaskCategory::Embodied, TaskCategory::GUI,
                               TaskCategory::Combat};
  std::ostringstream md, csv;
  md << "| Model | Mode |";
  csv << "model,mode";
  for (TaskCategory c : cats) {
    std::string n(minegrid::category_name(c));
    md << ' ' << n << " Steps | " << n << " SR(Mini) | " << n << " SR(All) |";
    std::string lc = n;
    std::transform(lc.begin(), lc.end(), lc.begin(),
                   [](unsigned char ch) { return std::tolower(ch); });
    csv << ',' << lc << "_steps_mean," << lc << "_steps_std," << lc
        << "_sr_mini," << lc << "_sr_mini_std," << lc << "_sr_all," << lc
        << "_sr_all_std";
  }
  md << " Cost(low/high) |\n|---|---|";
  csv << ",cost_ratio\n";
  for (std::size_t i = 0; i < 3 * 3 + 1; ++i) md << "---|";
  md << '\n';

  for (const auto& r : reports) {
    md << "| " << r.model << " | " << r.mode << " |";
    csv << r.model << ',' << r.mode;
    double max_ratio = 0.0;
    for (TaskCategory c : cats) {
      CategoryStats st;
      if (auto it = r.categories.find(c); it != r.categories.end())
        st = it->second;
      md << ' ' << stats::format_pm(st.steps_mean, st.steps_std) << " | "
         << stats::format_pm(100.0 * st.mini_sr_mean, 100.0 * st.mini_sr_std)
         << " | " << stats::format_pm(100.0 * st.sr_mean, 100.0 * st.sr_std)
         << " |";
      csv << ',' << stats::format_fixed(st.steps_mean, 6) << ','
          << stats::format_fixed(st.steps_std, 6) << ','
          << stats::format_fixed(st.mini_sr_mean, 6) << ','
          << stats::format_fixed(st.mini_sr_std, 6) << ','
          << stats::format_fixed(st.sr_mean, 6) << ','
          << stats::format_fixed(st.sr_std, 6);
      max_ratio = std::max(max_ratio, st.cost_ratio);
    }
    md << ' ' << stats::format_fixed(max_ratio, 1) << " |\n";
    csv << ',' << stats::format_fixed(max_ratio, 6) << '\n';
  }
  return ReportDocument{md.str(), csv.str()};
}

std::string episodes_to_jsonl(const std::vector<EpisodeResult>& episodes) {
  std::ostringstream out;
  for (const auto& e : episodes) {
    json j;
    j["task"] = e.task;
    j["seed"] = e.seed;
    j["success"] = e.success;
    j["steps"] = e.steps;
    j["cost"] = {{"high_level_calls", e.cost.high_level_calls},
                 {"low_level_calls", e.cost.low_level_calls}};
    out << j.dump() << '\n';
  }
  return out.str();
}

std::vector<EpisodeResult> episodes_from_jsonl(const std::string& text) {
  std::vector<EpisodeResult> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    EpisodeResult e;
    e.task = j.at("task").get<std::string>();
    e.seed = j.at("seed").get<std::uint64_t>();
    e.success = j.at("success").get<bool>();
    e.steps = j.at("steps").get<int>();
    e.cost.high_level_calls = j.at("cost").at("high_level_calls").get<long>();
    e.cost.low_level_calls = j.at("cost").at("low_level_calls").get<long>();
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace openha::harness
