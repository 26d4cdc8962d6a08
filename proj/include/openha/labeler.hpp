#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "openha/codecs.hpp"
#include "openha/minegrid.hpp"

namespace openha::labeler {

// One recorded timestep: the observation the agent saw, the env action it
// took, and the events that action produced.
struct TrajStep {
  int t = 0;
  minegrid::Observation obs;
  EnvAction a;
  std::vector<minegrid::Event> events;
};

struct Trajectory {
  std::string id;
  std::string instruction;
  std::vector<TrajStep> steps;  // t strictly increasing from 0, length >= 1
};

// Per-step visible-entity lists; index-aligned with Trajectory::steps.
using GroundTruth = std::vector<std::vector<minegrid::VisibleEntity>>;

// A trajectory together with its recorded ground truth, as written by the
// expert-rollout stage.
struct TrajectoryBundle {
  Trajectory traj;
  GroundTruth visible;
};

struct LabelerConfig {
  int window_k = 8;
  double turn_threshold_deg = 20.0;
  double look_threshold_deg = 20.0;
  double press_fraction = 0.5;  // fraction of window a button must be held
};

struct BadConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct GroundTruthMissing : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CoverageGap : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Label for the half-open step range [begin, end).
struct WindowLabel {
  int begin = 0;
  int end = 0;
  codecs::AbstractedAction action;
};

// Non-overlapping windows of window_k steps (last may be short). Verbs fire
// by held fraction (movement/jump/sprint/sneak) and cumulative camera sums
// (turn/look); an opposing pair resolves to the more-held side, a tie drops
// both. No verb -> Stop.
std::vector<WindowLabel> label_motion(const Trajectory& traj,
                                      const LabelerConfig& cfg = {});

// Same windowing. Priority per window: GUI click (Craft / Place / Interact),
// then world interaction on the faced entity (Mine / Attack / Use), then net
// displacement toward the nearest visible entity > 1 cell (Approach), else
// Explore with the sentinel coordinate.
std::vector<WindowLabel> label_grounding(const Trajectory& traj,
                                         const GroundTruth& ground_truth,
                                         const LabelerConfig& cfg = {});

// Segments end at achievement events (log gained, mob killed, crafted, GUI
// opened) and are named from a fixed template table; a trailing eventless
// segment gets "explore the world".
std::vector<WindowLabel> label_skill(const Trajectory& traj,
                                     const LabelerConfig& cfg = {});

enum class DatasetKind : int { DA = 0, Da, DCoA };
std::string_view dataset_kind_name(DatasetKind k);  // "D_A" | "D_a" | "D_CoA"

struct DatasetRecord {
  std::string traj;
  int t = 0;
  std::string instruction;
  minegrid::Observation obs;
  std::optional<codecs::AbstractedAction> A;
  std::optional<EnvAction> a;
  codecs::SpaceTag space = codecs::SpaceTag::Text;
  bool operator==(const DatasetRecord&) const = default;
};

struct Dataset {
  DatasetKind kind = DatasetKind::Da;
  std::vector<DatasetRecord> records;
};

// Window labels are repeated per step so D_A / D_CoA rows align 1:1 with the
// D_a timesteps. Trajectories are processed in id-sorted order; labels must
// tile every trajectory or CoverageGap is thrown (D_a needs no labels).
Dataset build_dataset(const std::vector<Trajectory>& trajs,
                      const std::map<std::string, std::vector<WindowLabel>>& labels,
                      DatasetKind kind, codecs::SpaceTag space);

// Concatenates datasets of one kind and applies a seed-deterministic shuffle;
// used to mix spaces for joint training.
Dataset merge_shuffled(const std::vector<Dataset>& parts, std::uint64_t seed);

// ---------------------------------------------------------------------------
// JSON I/O (byte-stable: fixed key order, integer-only numerics)
// ---------------------------------------------------------------------------

std::string obs_to_json(const minegrid::Observation& obs);
minegrid::Observation obs_from_json(const std::string& s);

std::string bundle_to_json(const TrajectoryBundle& b);
TrajectoryBundle bundle_from_json(const std::string& s);

// One record per line:
// {"traj":id,"t":n,"ins":...,"obs":{...},"A":str|null,"a":str|null,"space":s}
std::string to_jsonl(const Dataset& d);
Dataset from_jsonl(const std::string& text, DatasetKind kind,
                   const codecs::CodecConfig& codec_cfg = {});

}  // namespace openha::labeler
