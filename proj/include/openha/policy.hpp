#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "openha/codecs.hpp"
#include "openha/labeler.hpp"
#include "openha/minegrid.hpp"
#include "openha/nn.hpp"
#include "openha/vq.hpp"

namespace openha::policy {

struct UnknownSpace : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UnsupportedAbstraction : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DatasetKindMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalOverflow : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ShapeMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Which head family a forward pass decodes; set via the system prompt slot of
// the feature vector.
enum class PromptKind : int {
  TextOnly = 0,   // flat env-action decoding, no abstracted head
  HighLevelOnly,  // abstracted head alone (space chosen separately)
  MotionCoA,
  GroundingCoA,
  SkillCoA,
  LatentCoA,
};
inline constexpr int kNumPromptKinds = 6;

struct FormatPrompt {
  PromptKind kind = PromptKind::TextOnly;
  // Head selector for HighLevelOnly; ignored otherwise.
  codecs::SpaceTag space = codecs::SpaceTag::Motion;
};

// The abstracted space a prompt decodes, if any.
std::optional<codecs::SpaceTag> prompt_space(const FormatPrompt& p);
FormatPrompt coa_prompt(codecs::SpaceTag space);

// Object vocabulary for the grounding head; index 0 is "none".
const std::vector<std::string>& grounding_objects();
int grounding_object_index(const std::string& name);

// Legal motion verb combinations: one of {none,forward,back} x
// {none,left,right} x {none,turn-left,turn-right} x {none,up,down} x jump x
// sprint x sneak. Index 0 is the empty combination, surfaced as Stop.
inline constexpr int kMotionComboCount = 648;
int motion_index(const codecs::MotionAction& m);
codecs::MotionAction motion_from_index(int index);

struct FeatureConfig {
  std::vector<std::string> instructions;  // one-hot slots, fixed order
  static FeatureConfig from_task_suite();
  int dim() const;
};

// Flattened observation channels + status + instruction one-hot + prompt
// one-hot. Unknown instructions leave their slot block at zero.
nn::Vec featurize(const FeatureConfig& cfg, const minegrid::Observation& obs,
                  const std::string& instruction, const FormatPrompt& prompt);

enum class ModelKind : int { Flat = 0, HighLevel, LowLevel, UnifiedCoA };
std::string_view model_kind_name(ModelKind k);

struct PolicyConfig {
  ModelKind kind = ModelKind::UnifiedCoA;
  int hidden = 256;
  int codebook_size = 64;  // latent head width
  FeatureConfig features = FeatureConfig::from_task_suite();
};

// Dimension of the abstracted-action conditioning block fed to the low path;
// all-zero when decoding flat.
int embed_dim(const PolicyConfig& cfg);
nn::Vec embed_abstracted(const PolicyConfig& cfg,
                         const codecs::AbstractedAction& a);

// One net covers every model kind: shared trunk (tanh), linear heads per
// abstracted space, and a low path conditioned on [trunk(feat); embed(A)].
class ActionNet {
 public:
  explicit ActionNet(const PolicyConfig& cfg);

  const PolicyConfig& config() const { return cfg_; }
  void init(Rng& rng);

  // Parameter blocks in fixed order (trunk, heads, low path), for the
  // optimizer, checkpoints, and finite-difference tests.
  std::vector<nn::Vec*> param_blocks();
  std::vector<const nn::Vec*> param_blocks() const;

  nn::Vec trunk_features(const nn::Vec& feat) const;  // tanh(trunk(feat))

  // Head logits given trunk output h. Grounding returns three vectors
  // (verb, object, coordinate); other spaces return one.
  std::vector<nn::Vec> high_logits(const nn::Vec& h,
                                   codecs::SpaceTag space) const;
  // 35 factored env-action logits; A empty = flat decoding.
  nn::Vec low_logits(const nn::Vec& h,
                     const std::optional<codecs::AbstractedAction>& A) const;

  double high_logprob(const nn::Vec& h, const codecs::AbstractedAction& A) const;
  double low_logprob(const nn::Vec& h,
                     const std::optional<codecs::AbstractedAction>& A,
                     const EnvAction& a) const;

  struct Grads;
  // Cross-entropy of one dataset record under the prompt implied by its
  // fields; accumulates gradients when given. high/low term split returned.
  struct LossBreakdown {
    double total = 0.0;
    double high = 0.0;
    double low = 0.0;
  };
  LossBreakdown example_loss(const nn::Vec& feat,
                             const std::optional<codecs::AbstractedAction>& A,
                             const std::optional<EnvAction>& a,
                             Grads* grads = nullptr) const;

  struct Grads {
    std::vector<nn::Vec> blocks;
    explicit Grads(const ActionNet& net);
    void zero();
    void scale(double s);
    void add(const Grads& other);
  };

 private:
  friend std::string save_policy(const ActionNet&);
  friend ActionNet load_policy(const std::string&);
  PolicyConfig cfg_;
  nn::Mlp trunk_;
  nn::Mlp motion_, g_verb_, g_obj_, g_coord_, skill_, latent_;
  nn::Mlp low_;
};

codecs::AbstractedAction sample_abstracted(const ActionNet& model,
                                           const nn::Vec& feat,
                                           codecs::SpaceTag space, Rng& rng,
                                           bool greedy = false);

EnvAction decode_low(const ActionNet& model, const nn::Vec& feat,
                     const std::optional<codecs::AbstractedAction>& A,
                     Rng& rng, bool greedy = false);

struct CoAResult {
  codecs::AbstractedAction A;
  EnvAction a;
  double log_joint = 0.0;
  double log_high = 0.0;
  double log_low = 0.0;
};
CoAResult coa_step(const ActionNet& model, const nn::Vec& feat,
                   codecs::SpaceTag space, Rng& rng, bool greedy = false);

// Streams a VQ-decoded window one env action per call; re-decodes whenever
// the code changes or the window is exhausted.
class LatentExecutor {
 public:
  explicit LatentExecutor(const vq::VQModel& model) : model_(&model) {}
  EnvAction step(int code);

 private:
  const vq::VQModel* model_;
  vq::ActionWindow window_;
  int code_ = -1;
  int cursor_ = 0;
};

struct TrainConfig {
  double lr = 1e-3;
  int epochs = 20;
  int batch = 64;
  std::uint64_t seed = 0;
  int stage = 1;  // stage 2 halves the learning rate unless lr is overridden
  std::optional<double> stage2_lr;  // default: lr / 2
};

struct TrainResult {
  std::vector<double> epoch_loss;
  std::map<std::string, double> final_loss_per_space;  // space name -> mean
};

// Behavior cloning over the given datasets. Accepted kinds per model:
// Flat <- D_a; HighLevel <- D_A; LowLevel <- D_CoA (low term only);
// UnifiedCoA <- stage 1 D_A/D_a, stage 2 D_CoA.
TrainResult train_bc(ActionNet& model,
                     const std::vector<labeler::Dataset>& datasets,
                     const TrainConfig& cfg);

// Identical objective over a heterogeneous mixed-space union; requires at
// least two spaces among the records.
TrainResult train_all_in_one(ActionNet& model,
                             const std::vector<labeler::Dataset>& datasets,
                             const TrainConfig& cfg);

// Versioned JSON checkpoint (same scheme as the VQ tokenizer).
std::string save_policy(const ActionNet& model);
ActionNet load_policy(const std::string& text);

}  // namespace openha::policy
