#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "openha/harness.hpp"
#include "openha/labeler.hpp"
#include "openha/policy.hpp"
#include "openha/vq.hpp"

namespace openha::pipeline {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// End-to-end run settings; JSON-loadable, unknown keys rejected.
struct RunConfig {
  std::uint64_t seed = 7;
  std::string out_dir = "out";
  std::vector<std::string> tasks;  // empty = full suite
  int episodes_per_task = 8;       // expert rollouts per task
  labeler::LabelerConfig labeler;
  vq::VQConfig vq;
  int hidden = 32;  // policy trunk width
  policy::TrainConfig train;
  harness::EvalConfig eval;
};

RunConfig config_from_json(const std::string& text);
std::string config_to_json(const RunConfig& cfg);  // canonical key order
std::string config_hash(const RunConfig& cfg);     // hex digest of canonical form

std::vector<std::string> effective_tasks(const RunConfig& cfg);

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

labeler::TrajectoryBundle expert_rollout(const minegrid::TaskSpec& task,
                                         std::uint64_t seed);

// episodes_per_task rollouts per task, seeds cfg.seed, cfg.seed+1, ...;
// deterministic (task, seed) order regardless of worker count.
std::vector<labeler::TrajectoryBundle> gen_experts(const RunConfig& cfg,
                                                   int workers = 0);

// Non-overlapping windows of vq.window env actions; a short tail is padded
// with null actions.
std::vector<vq::ActionWindow> collect_windows(
    const std::vector<labeler::TrajectoryBundle>& bundles, int window);

vq::TrainedVQ train_action_vq(
    const std::vector<labeler::TrajectoryBundle>& bundles,
    const RunConfig& cfg);

using LabelMap = std::map<std::string, std::vector<labeler::WindowLabel>>;

// Window labels for one abstracted space; Latent requires a trained VQ model.
LabelMap label_space(const std::vector<labeler::TrajectoryBundle>& bundles,
                     codecs::SpaceTag space, const labeler::LabelerConfig& cfg,
                     const vq::VQModel* vq = nullptr);

std::vector<labeler::Trajectory> trajectories_of(
    const std::vector<labeler::TrajectoryBundle>& bundles);

// Flat policy behavior-cloned on D_a.
policy::ActionNet train_flat(
    const std::vector<labeler::TrajectoryBundle>& bundles,
    const RunConfig& cfg);

// Unified CoA specialist for one space: stage 1 on D_A + D_a, stage 2 on
// D_CoA, per the two-stage curriculum.
policy::ActionNet train_unified(
    const std::vector<labeler::TrajectoryBundle>& bundles,
    codecs::SpaceTag space, const LabelMap& labels, const RunConfig& cfg);

// Mixed-space model over the given (space, labels) pairs; same curriculum,
// datasets merged with a seed-deterministic shuffle.
policy::ActionNet train_mixed(
    const std::vector<labeler::TrajectoryBundle>& bundles,
    const std::vector<std::pair<codecs::SpaceTag, LabelMap>>& spaces,
    const RunConfig& cfg);

// ---------------------------------------------------------------------------
// Artifact files: one JSON header line carrying the config hash, then a body.
// ---------------------------------------------------------------------------

inline constexpr int kToolVersion = 1;

std::string artifact_header(const std::string& hash, const std::string& kind);
struct Artifact {
  std::string hash;
  std::string kind;
  std::string body;  // everything after the header line
};
Artifact parse_artifact(const std::string& text);  // ConfigError on bad header

std::string labels_to_jsonl(const LabelMap& labels,
                            const codecs::CodecConfig& codec_cfg = {});
LabelMap labels_from_jsonl(const std::string& text,
                           const codecs::CodecConfig& codec_cfg = {});

// Persisted evaluation: meta line {"model","mode"}, then episodes tagged
// {"set":"main"|"mini", ...}; aggregation is recomputed on read.
std::string eval_to_body(const harness::CategoryReport& rep);
harness::CategoryReport eval_from_body(const std::string& body);

}  // namespace openha::pipeline
