#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "openha/codecs.hpp"
#include "openha/nn.hpp"

namespace openha::vq {

struct EmptyCodebook : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalOverflow : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UntrainedModel : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidCode : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ShapeMismatch : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct VQConfig {
  int window = 8;            // actions per latent code
  int codebook_size = 64;    // K
  int embedding_dim = 32;    // d
  double commitment_beta = 0.25;
  std::vector<int> encoder_hidden = {128};
  std::vector<int> decoder_hidden = {128};
  double learning_rate = 1e-3;
  int epochs = 30;
  int batch_size = 32;
  std::uint64_t seed = 0;
};

// Fixed-length run of env actions; the encoder sees it as per-step one-hots
// over the same four groups the raw token codec uses (9 + 11 + 11 + 4).
struct ActionWindow {
  std::vector<EnvAction> actions;  // length exactly cfg.window
};

inline constexpr int kStepFeatureDim = 35;

// Group indices for one action; conflicting or out-of-subset buttons reduce
// deterministically (movement conflicts drop to none, interaction priority
// attack > use > jump).
struct GroupIndices {
  int movement = 0;
  int pitch = 0;
  int yaw = 0;
  int interaction = 0;
  bool operator==(const GroupIndices&) const = default;
};
GroupIndices group_indices(const EnvAction& a,
                           const codecs::RawCodecConfig& cfg = {});
EnvAction action_from_groups(const GroupIndices& g,
                             const codecs::RawCodecConfig& cfg = {});

// L x 35 one-hot feature view, flattened step-major.
nn::Vec window_features(const ActionWindow& w, int window_len);

struct VQModel {
  VQConfig cfg;
  nn::Mlp encoder;  // L*35 -> d
  nn::Mlp decoder;  // d -> L*35 logits
  nn::Vec codebook;  // K x d row-major
  std::vector<long> usage;  // per-code quantize counts since last reset
  long quantize_calls = 0;
  bool trained = false;

  explicit VQModel(const VQConfig& cfg);
};

// Nearest codebook row by squared Euclidean distance, lowest index on ties.
struct QuantizeResult {
  int code = 0;
  nn::Vec z_q;
};
QuantizeResult quantize(const nn::Vec& z_e, const nn::Vec& codebook,
                        int embedding_dim);

struct LossTerms {
  double total = 0.0;
  double rec = 0.0;
  double codebook_term = 0.0;
  double commit_term = 0.0;
};

// Per-step per-group cross-entropy of decoder logits against the window's
// one-hot targets; logits has length L*35.
double reconstruction_loss(const nn::Vec& logits, const nn::Vec& features,
                           int window_len, nn::Vec* dlogits = nullptr);

// total = rec + ||sg(z_e) - e||^2 + beta * ||z_e - sg(e)||^2. Usage counters
// on the model advance by one call.
LossTerms vq_loss(VQModel& model, const ActionWindow& w);

// Same forward pass, also accumulating analytic gradients. The straight-
// through estimator copies the decoder-input gradient onto z_e; the codebook
// row only receives the gap term.
LossTerms vq_loss_grads(VQModel& model, const ActionWindow& w,
                        nn::Vec& enc_grad, nn::Vec& dec_grad,
                        nn::Vec& cb_grad);

struct TrainCurvePoint {
  int epoch = 0;
  double mean_total = 0.0;
  double mean_rec = 0.0;
  double perplexity = 0.0;  // exp of usage entropy over the epoch
  int dead_codes = 0;
};

struct TrainedVQ {
  VQModel model;
  std::vector<TrainCurvePoint> curve;
};

TrainedVQ train_vq(const std::vector<ActionWindow>& windows,
                   const VQConfig& cfg);

codecs::AbstractedAction encode_actions(const VQModel& model,
                                        const ActionWindow& w);
ActionWindow decode_latent(const VQModel& model, int code);

// JSON checkpoint with config, shapes, and flat row-major weights.
std::string save_vq(const VQModel& model);
VQModel load_vq(const std::string& text);

}  // namespace openha::vq
