#pragma once

#include <cstddef>
#include <vector>

#include "openha/rng.hpp"

namespace openha::nn {

using Vec = std::vector<double>;

// Multilayer perceptron with tanh hidden units and a linear output layer.
// Parameters live in one flat vector (per layer: W row-major out x in, then
// b) so optimizers and checkpoints treat every model the same way.
class Mlp {
 public:
  explicit Mlp(std::vector<int> sizes);  // layer widths, at least {in, out}

  int in_size() const { return sizes_.front(); }
  int out_size() const { return sizes_.back(); }
  int param_count() const { return static_cast<int>(params_.size()); }
  Vec& params() { return params_; }
  const Vec& params() const { return params_; }

  // W ~ N(0, 1/fan_in), b = 0.
  void init(Rng& rng);

  struct Cache {
    std::vector<Vec> acts;  // acts[0] = input, then post-activation per layer
  };

  Vec forward(const Vec& x, Cache* cache = nullptr) const;

  // dy = dL/dy at the output. Accumulates parameter gradients into grad
  // (sized param_count) and returns dL/dx.
  Vec backward(const Cache& cache, const Vec& dy, Vec& grad) const;

 private:
  std::vector<int> sizes_;
  std::vector<int> offsets_;  // start of each layer's W in params_
  Vec params_;
};

// Adam with bias correction; state is lazily sized to the parameter vector.
struct Adam {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  Vec m, v;
  long step_count = 0;

  void step(Vec& params, const Vec& grad);
};

void softmax(const Vec& logits, Vec& probs);
double log_sum_exp(const Vec& logits);

// -log softmax(logits)[target]; if dlogits is given, adds the gradient
// (softmax - onehot) into it.
double ce_from_logits(const Vec& logits, int target, Vec* dlogits = nullptr);

int argmax(const Vec& v);
int sample_categorical(const Vec& probs, Rng& rng);

}  // namespace openha::nn
