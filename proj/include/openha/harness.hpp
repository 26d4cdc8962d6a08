#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "openha/minegrid.hpp"
#include "openha/policy.hpp"
#include "openha/vq.hpp"

namespace openha::harness {

struct ModeModelMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SuiteMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InferenceMode {
  enum class Kind : int { Fast = 0, Slow } kind = Kind::Fast;
  int replan_interval = 8;  // Fast only; >= 1
};
InferenceMode fast_mode(int replan_interval = 8);
InferenceMode slow_mode();
std::string_view mode_name(const InferenceMode& m);

// A runnable agent. Exactly one of:
//  - scripted: the deterministic expert (mode ignored, no model calls);
//  - flat: `low` alone, no space (Fast degenerates to flat decoding);
//  - hierarchical: `high` (HighLevel or UnifiedCoA) + `low` + space, Fast;
//  - unified: high == low, kind UnifiedCoA, space set, either mode.
// `vq` replaces the learned low path for the Latent space: the cached code
// streams env actions through a LatentExecutor.
// Motion-space bundles execute movement/stance/camera only; interaction and
// GUI buttons are masked (motion primitives are object-agnostic).
struct PolicyBundle {
  bool scripted = false;
  const policy::ActionNet* high = nullptr;
  const policy::ActionNet* low = nullptr;
  std::optional<codecs::SpaceTag> space;
  const vq::VQModel* vq = nullptr;
};
PolicyBundle scripted_bundle();
PolicyBundle flat_bundle(const policy::ActionNet& net);
PolicyBundle hierarchical_bundle(const policy::ActionNet& high,
                                 const policy::ActionNet& low,
                                 codecs::SpaceTag space,
                                 const vq::VQModel* vq = nullptr);
PolicyBundle unified_bundle(const policy::ActionNet& net,
                            codecs::SpaceTag space,
                            const vq::VQModel* vq = nullptr);

struct EpisodeCost {
  long high_level_calls = 0;
  long low_level_calls = 0;
};

struct EpisodeResult {
  std::string task;
  std::uint64_t seed = 0;
  bool success = false;
  int steps = 0;  // first success step, or max_steps on failure
  EpisodeCost cost;
};

// Per-episode RNG streams derive from (task, seed) alone, so execution order
// never changes sampled results.
EpisodeResult run_episode(const PolicyBundle& bundle, const InferenceMode& mode,
                          const minegrid::TaskSpec& task, std::uint64_t seed,
                          bool greedy = true, int max_steps_override = 0);

struct EvalConfig {
  std::vector<std::string> tasks;  // ids into task_suite()
  int seeds_per_task = 3;          // >= 3
  std::uint64_t first_seed = 1;
  std::vector<std::string> mini_tasks;  // subset of tasks
  int mini_runs_per_task = 10;          // >= 10
  int max_steps = 0;                    // 0 = task default
  bool greedy = true;
};

struct CategoryStats {
  int tasks = 0;
  long episodes = 0;
  long successes = 0;
  double sr_mean = 0.0;  // mean over per-task success rates, in [0,1]
  double sr_std = 0.0;   // std over per-task success rates
  double steps_mean = 0.0;          // failures counted at max_steps
  double steps_std = 0.0;           // std over per-task step means
  double steps_success_mean = 0.0;  // success-only mean, 0 if none
  double mini_sr_mean = 0.0;
  double mini_sr_std = 0.0;
  double cost_ratio = 0.0;  // low_level_calls / high_level_calls, 0 if none
};

struct CategoryReport {
  std::string model;  // label for report rows
  std::string mode;
  std::vector<EpisodeResult> episodes;       // main set, (task, seed) order
  std::vector<EpisodeResult> mini_episodes;  // mini set
  std::map<minegrid::TaskCategory, CategoryStats> categories;
};

// Aggregates are recomputed from the raw episode lists; persisting the
// episodes and re-aggregating reproduces the report bit-exactly.
CategoryReport aggregate(const std::string& model, const std::string& mode,
                         std::vector<EpisodeResult> episodes,
                         std::vector<EpisodeResult> mini_episodes);

CategoryReport evaluate(const PolicyBundle& bundle, const InferenceMode& mode,
                        const EvalConfig& cfg, const std::string& model_label,
                        int threads = 0);

struct ComparisonCell {
  double delta = 0.0;  // sr_a - sr_b over pooled episodes
  double p_value = 1.0;
};
// Pools successes per category and runs a two-proportion z-test; requires the
// same (task, seed) pairs on both sides.
std::map<minegrid::TaskCategory, ComparisonCell> compare(
    const CategoryReport& a, const CategoryReport& b);

struct ReportDocument {
  std::string markdown;
  std::string csv;
};
// One row per report; per category: Steps, SR(Mini), SR(All) cells formatted
// "x.x^{±y.y}" (SR in percent), plus a trailing cost-ratio column.
ReportDocument render_report(const std::vector<CategoryReport>& reports);

std::string episodes_to_jsonl(const std::vector<EpisodeResult>& episodes);
std::vector<EpisodeResult> episodes_from_jsonl(const std::string& text);

}  // namespace openha::harness
