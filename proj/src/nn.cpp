#include "openha/nn.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace openha::nn {

Mlp::Mlp(std::vector<int> sizes) : sizes_(std::move(sizes)) {
  assert(sizes_.size() >= 2);
  int total = 0;
  for (std::size_t l = 1; l < sizes_.size(); ++l) {
    offsets_.push_back(total);
    total += sizes_[l] * sizes_[l - 1] + sizes_[l];
  }
  params_.assign(total, 0.0);
}

void Mlp::init(Rng& rng) {
  for (std::size_t l = 1; l < sizes_.size(); ++l) {
    const int in = sizes_[l - 1];
    const int out = sizes_[l];
    double* w = params_.data() + offsets_[l - 1];
    const double scale = 1.0 / std::sqrt(static_cast<double>(in));
    for (int i = 0; i < out * in; ++i) w[i] = rng.next_gaussian() * scale;
    for (int i = 0; i < out; ++i) w[out * in + i] = 0.0;
  }
}

Vec Mlp::forward(const Vec& x, Cache* cache) const {
  assert(static_cast<int>(x.size()) == sizes_.front());
  if (cache) {
    cache->acts.clear();
    cache->acts.push_back(x);
  }
  Vec cur = x;
  for (std::size_t l = 1; l < sizes_.size(); ++l) {
    const int in = sizes_[l - 1];
    const int out = sizes_[l];
    const double* w = params_.data() + offsets_[l - 1];
    const double* b = w + out * in;
    Vec next(out);
    for (int o = 0; o < out; ++o) {
      double s = b[o];
      const double* row = w + o * in;
      for (int i = 0; i < in; ++i) s += row[i] * cur[i];
      next[o] = s;
    }
    if (l + 1 < sizes_.size()) {
      for (double& v : next) v = std::tanh(v);
    }
    if (cache) cache->acts.push_back(next);
    cur = std::move(next);
  }
  return cur;
}

Vec Mlp::backward(const Cache& cache, const Vec& dy, Vec& grad) const {
  assert(cache.acts.size() == sizes_.size());
  assert(static_cast<int>(grad.size()) == param_count());
  Vec delta = dy;
  for (std::size_t l = sizes_.size() - 1; l >= 1; --l) {
    const int in = sizes_[l - 1];
    const int out = sizes_[l];
    const double* w = params_.data() + offsets_[l - 1];
    double* gw = grad.data() + offsets_[l - 1];
    double* gb = gw + out * in;
    const Vec& a_in = cache.acts[l - 1];
    // Hidden layers cached post-tanh activations; fold the tanh' term in.
    if (l + 1 < sizes_.size()) {
      const Vec& a_out = cache.acts[l];
      for (int o = 0; o < out; ++o) delta[o] *= 1.0 - a_out[o] * a_out[o];
    }
    for (int o = 0; o < out; ++o) {
      double* grow = gw + o * in;
      const double d = delta[o];
      for (int i = 0; i < in; ++i) grow[i] += d * a_in[i];
      gb[o] += d;
    }
    Vec dx(in, 0.0);
    for (int o = 0; o < out; ++o) {
      const double* row = w + o * in;
      const double d = delta[o];
      for (int i = 0; i < in; ++i) dx[i] += row[i] * d;
    }
    delta = std::move(dx);
  }
  return delta;
}

void Adam::step(Vec& params, const Vec& grad) {
  assert(params.size() == grad.size());
  if (m.size() != params.size()) {
    m.assign(params.size(), 0.0);
    v.assign(params.size(), 0.0);
    step_count = 0;
  }
  ++step_count;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
    v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
    params[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
  }
}

void softmax(const Vec& logits, Vec& probs) {
  probs.resize(logits.size());
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp(logits[i] - mx);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
}

double log_sum_exp(const Vec& logits) {
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - mx);
  return mx + std::log(sum);
}

double ce_from_logits(const Vec& logits, int target, Vec* dlogits) {
  const double lse = log_sum_exp(logits);
  if (dlogits) {
    dlogits->resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
      double p = std::exp(logits[i] - lse);
      (*dlogits)[i] += p - (static_cast<int>(i) == target ? 1.0 : 0.0);
    }
  }
  return lse - logits[target];
}

int argmax(const Vec& v) {
  return static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
}

int sample_categorical(const Vec& probs, Rng& rng) {
  double u = rng.next_double();
  for (std::size_t i = 0; i < probs.size(); ++i) {
    u -= probs[i];
    if (u < 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

}  // namespace openha::nn
