#include "openha/vq.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"
#include "openha/rng.hpp"

namespace openha::vq {

using codecs::RawCodecConfig;
using json = nlohmann::ordered_json;
using nn::Vec;

GroupIndices group_indices(const EnvAction& a, const RawCodecConfig& cfg) {
  GroupIndices g;
  const bool fwd = a.pressed(ButtonName::Forward);
  const bool back = a.pressed(ButtonName::Back);
  const bool left = a.pressed(ButtonName::Left);
  const bool right = a.pressed(ButtonName::Right);
  const int fb = (fwd && !back) ? 1 : (back && !fwd) ? 2 : 0;
  const int lr = (left && !right) ? 1 : (right && !left) ? 2 : 0;
  g.movement = fb * 3 + lr;
  g.pitch = quantize_camera_axis(a.camera_pitch, cfg.camera);
  g.yaw = quantize_camera_axis(a.camera_yaw, cfg.camera);
  if (a.pressed(ButtonName::Attack)) {
    g.interaction = 1;
  } else if (a.pressed(ButtonName::Use)) {
    g.interaction = 2;
  } else if (a.pressed(ButtonName::Jump)) {
    g.interaction = 3;
  }
  return g;
}

EnvAction action_from_groups(const GroupIndices& g, const RawCodecConfig& cfg) {
  EnvAction a = null_action();
  const int fb = g.movement / 3;
  const int lr = g.movement % 3;
  if (fb == 1) a.set(ButtonName::Forward, true);
  if (fb == 2) a.set(ButtonName::Back, true);
  if (lr == 1) a.set(ButtonName::Left, true);
  if (lr == 2) a.set(ButtonName::Right, true);
  a.camera_pitch = dequantize_camera_axis(g.pitch, cfg.camera);
  a.camera_yaw = dequantize_camera_axis(g.yaw, cfg.camera);
  if (g.interaction == 1) a.set(ButtonName::Attack, true);
  if (g.interaction == 2) a.set(ButtonName::Use, true);
  if (g.interaction == 3) a.set(ButtonName::Jump, true);
  return a;
}

Vec window_features(const ActionWindow& w, int window_len) {
  if (static_cast<int>(w.actions.size()) != window_len) {
    throw ShapeMismatch("window length mismatch");
  }
  Vec f(static_cast<std::size_t>(window_len) * kStepFeatureDim, 0.0);
  for (int t = 0; t < window_len; ++t) {
    const GroupIndices g = group_indices(w.actions[t]);
    double* step = f.data() + t * kStepFeatureDim;
    step[RawCodecConfig::kMovementBase + g.movement] = 1.0;
    step[RawCodecConfig::kPitchBase + g.pitch] = 1.0;
    step[RawCodecConfig::kYawBase + g.yaw] = 1.0;
    step[RawCodecConfig::kInteractionBase + g.interaction] = 1.0;
  }
  return f;
}

namespace {

std::vector<int> mlp_sizes(int in, const std::vector<int>& hidden, int out) {
  std::vector<int> sizes = {in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  return sizes;
}

}  // namespace

VQModel::VQModel(const VQConfig& c)
    : cfg(c),
      encoder(mlp_sizes(c.window * kStepFeatureDim, c.encoder_hidden,
                        c.embedding_dim)),
      decoder(mlp_sizes(c.embedding_dim, c.decoder_hidden,
                        c.window * kStepFeatureDim)),
      codebook(static_cast<std::size_t>(c.codebook_size) * c.embedding_dim,
               0.0),
      usage(c.codebook_size, 0) {}

QuantizeResult quantize(const Vec& z_e, const Vec& codebook,
                        int embedding_dim) {
  const int K = static_cast<int>(codebook.size()) / embedding_dim;
  if (K == 0 || codebook.empty()) throw EmptyCodebook("codebook is empty");
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (int k = 0; k < K; ++k) {
    const double* e = codebook.data() + static_cast<std::size_t>(k) * embedding_dim;
    double d = 0.0;
    for (int i = 0; i < embedding_dim; ++i) {
      const double diff = z_e[i] - e[i];
      d += diff * diff;
    }
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  QuantizeResult r;
  r.code = best;
  r.z_q.assign(codebook.begin() + static_cast<std::size_t>(best) * embedding_dim,
               codebook.begin() + static_cast<std::size_t>(best + 1) * embedding_dim);
  return r;
}

double reconstruction_loss(const Vec& logits, const Vec& features,
                           int window_len, Vec* dlogits) {
  if (dlogits) dlogits->assign(logits.size(), 0.0);
  double rec = 0.0;
  for (int t = 0; t < window_len; ++t) {
    const int base = t * kStepFeatureDim;
    const int group_base[4] = {RawCodecConfig::kMovementBase,
                               RawCodecConfig::kPitchBase,
                               RawCodecConfig::kYawBase,
                               RawCodecConfig::kInteractionBase};
    const int group_size[4] = {RawCodecConfig::kMovementSize,
                               RawCodecConfig::kPitchSize,
                               RawCodecConfig::kYawSize,
                               RawCodecConfig::kInteractionSize};
    for (int g = 0; g < 4; ++g) {
      const int lo = base + group_base[g];
      Vec gl(logits.begin() + lo, logits.begin() + lo + group_size[g]);
      int target = 0;
      for (int i = 0; i < group_size[g]; ++i) {
        if (features[lo + i] > 0.5) target = i;
      }
      Vec dgl(group_size[g], 0.0);
      rec += nn::ce_from_logits(gl, target, dlogits ? &dgl : nullptr);
      if (dlogits) {
        for (int i = 0; i < group_size[g]; ++i) (*dlogits)[lo + i] += dgl[i];
      }
    }
  }
  return rec;
}

namespace {

LossTerms loss_impl(VQModel& model, const ActionWindow& w, Vec* enc_grad,
                    Vec* dec_grad, Vec* cb_grad) {
  const VQConfig& cfg = model.cfg;
  const Vec f = window_features(w, cfg.window);
  nn::Mlp::Cache enc_cache;
  const Vec z_e = model.encoder.forward(f, enc_grad ? &enc_cache : nullptr);
  const QuantizeResult q = quantize(z_e, model.codebook, cfg.embedding_dim);
  model.usage[q.code]++;
  model.quantize_calls++;

  nn::Mlp::Cache dec_cache;
  const Vec logits = model.decoder.forward(q.z_q, dec_grad ? &dec_cache : nullptr);

  LossTerms terms;
  Vec dlogits;
  terms.rec = reconstruction_loss(logits, f, cfg.window,
                                  dec_grad ? &dlogits : nullptr);
  for (int i = 0; i < cfg.embedding_dim; ++i) {
    const double gap = z_e[i] - q.z_q[i];
    terms.codebook_term += gap * gap;
  }
  terms.commit_term = terms.codebook_term;
  terms.total = terms.rec + terms.codebook_term +
                cfg.commitment_beta * terms.commit_term;
  if (!std::isfinite(terms.total)) {
    throw NumericalOverflow("vq loss diverged");
  }

  if (dec_grad) {
    // d rec / d z_q, then straight-through copy onto z_e.
    Vec dzq = model.decoder.backward(dec_cache, dlogits, *dec_grad);
    Vec dze = std::move(dzq);
    for (int i = 0; i < cfg.embedding_dim; ++i) {
      dze[i] += 2.0 * cfg.commitment_beta * (z_e[i] - q.z_q[i]);
    }
    model.encoder.backward(enc_cache, dze, *enc_grad);
    double* row =
        cb_grad->data() + static_cast<std::size_t>(q.code) * cfg.embedding_dim;
    for (int i = 0; i < cfg.embedding_dim; ++i) {
      row[i] += 2.0 * (q.z_q[i] - z_e[i]);
    }
  }
  return terms;
}

}  // namespace

LossTerms vq_loss(VQModel& model, const ActionWindow& w) {
  return loss_impl(model, w, nullptr, nullptr, nullptr);
}

LossTerms vq_loss_grads(VQModel& model, const ActionWindow& w, Vec& enc_grad,
                        Vec& dec_grad, Vec& cb_grad) {
  enc_grad.assign(model.encoder.param_count(), 0.0);
  dec_grad.assign(model.decoder.param_count(), 0.0);
  cb_grad.assign(model.codebook.size(), 0.0);
  return loss_impl(model, w, &enc_grad, &dec_grad, &cb_grad);
}

TrainedVQ train_vq(const std::vector<ActionWindow>& windows,
                   const VQConfig& cfg) {
  TrainedVQ out{VQModel(cfg), {}};
  VQModel& model = out.model;
  Rng rng(cfg.seed);
  model.encoder.init(rng);
  model.decoder.init(rng);
  // Codebook rows start at encoder outputs of random windows so the initial
  // assignment is not degenerate.
  for (int k = 0; k < cfg.codebook_size; ++k) {
    const auto& w = windows[rng.next_below(windows.size())];
    const Vec z = model.encoder.forward(window_features(w, cfg.window));
    std::copy(z.begin(), z.end(),
              model.codebook.begin() +
                  static_cast<std::size_t>(k) * cfg.embedding_dim);
  }

  nn::Adam enc_opt{cfg.learning_rate};
  nn::Adam dec_opt{cfg.learning_rate};
  nn::Adam cb_opt{cfg.learning_rate};

  std::vector<std::size_t> order(windows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  Vec eg, dg, cg, eg_sum, dg_sum, cg_sum;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::fill(model.usage.begin(), model.usage.end(), 0L);
    model.quantize_calls = 0;
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.next_below(i)]);
    }
    double sum_total = 0.0, sum_rec = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size) {
      const std::size_t stop =
          std::min(order.size(), start + cfg.batch_size);
      eg_sum.assign(model.encoder.param_count(), 0.0);
      dg_sum.assign(model.decoder.param_count(), 0.0);
      cg_sum.assign(model.codebook.size(), 0.0);
      for (std::size_t i = start; i < stop; ++i) {
        const LossTerms t = vq_loss_grads(model, windows[order[i]], eg, dg, cg);
        sum_total += t.total;
        sum_rec += t.rec;
        for (std::size_t p = 0; p < eg_sum.size(); ++p) eg_sum[p] += eg[p];
        for (std::size_t p = 0; p < dg_sum.size(); ++p) dg_sum[p] += dg[p];
        for (std::size_t p = 0; p < cg_sum.size(); ++p) cg_sum[p] += cg[p];
      }
      const double inv = 1.0 / static_cast<double>(stop - start);
      for (double& v : eg_sum) v *= inv;
      for (double& v : dg_sum) v *= inv;
      for (double& v : cg_sum) v *= inv;
      enc_opt.step(model.encoder.params(), eg_sum);
      dec_opt.step(model.decoder.params(), dg_sum);
      cb_opt.step(model.codebook, cg_sum);
    }

    TrainCurvePoint pt;
    pt.epoch = epoch;
    pt.mean_total = sum_total / static_cast<double>(windows.size());
    pt.mean_rec = sum_rec / static_cast<double>(windows.size());
    double h = 0.0;
    for (long u : model.usage) {
      if (u > 0) {
        const double p = static_cast<double>(u) /
                         static_cast<double>(model.quantize_calls);
        h -= p * std::log(p);
      } else {
        pt.dead_codes++;
      }
    }
    pt.perplexity = std::exp(h);
    out.curve.push_back(pt);

    // Dead codes jump to encoder outputs of random windows.
    for (int k = 0; k < cfg.codebook_size; ++k) {
      if (model.usage[k] != 0) continue;
      const auto& w = windows[rng.next_below(windows.size())];
      const Vec z = model.encoder.forward(window_features(w, cfg.window));
      std::copy(z.begin(), z.end(),
                model.codebook.begin() +
                    static_cast<std::size_t>(k) * cfg.embedding_dim);
    }
  }
  model.trained = true;
  return out;
}

codecs::AbstractedAction encode_actions(const VQModel& model,
                                        const ActionWindow& w) {
  if (!model.trained) throw UntrainedModel("model has not been trained");
  const Vec z_e =
      model.encoder.forward(window_features(w, model.cfg.window));
  const QuantizeResult q = quantize(z_e, model.codebook, model.cfg.embedding_dim);
  return codecs::LatentAction{q.code};
}

ActionWindow decode_latent(const VQModel& model, int code) {
  if (!model.trained) throw UntrainedModel("model has not been trained");
  if (code < 0 || code >= model.cfg.codebook_size) {
    throw InvalidCode("latent code out of range");
  }
  const Vec e(model.codebook.begin() +
                  static_cast<std::size_t>(code) * model.cfg.embedding_dim,
              model.codebook.begin() +
                  static_cast<std::size_t>(code + 1) * model.cfg.embedding_dim);
  const Vec logits = model.decoder.forward(e);
  ActionWindow w;
  for (int t = 0; t < model.cfg.window; ++t) {
    const int base = t * kStepFeatureDim;
    auto group_argmax = [&](int off, int size) {
      const Vec gl(logits.begin() + base + off,
                   logits.begin() + base + off + size);
      return nn::argmax(gl);
    };
    GroupIndices g;
    g.movement = group_argmax(RawCodecConfig::kMovementBase,
                              RawCodecConfig::kMovementSize);
    g.pitch =
        group_argmax(RawCodecConfig::kPitchBase, RawCodecConfig::kPitchSize);
    g.yaw = group_argmax(RawCodecConfig::kYawBase, RawCodecConfig::kYawSize);
    g.interaction = group_argmax(RawCodecConfig::kInteractionBase,
                                 RawCodecConfig::kInteractionSize);
    w.actions.push_back(action_from_groups(g));
  }
  return w;
}

namespace {

json vec_json(const Vec& v) {
  json out = json::array();
  for (double x : v) out.push_back(x);
  return out;
}

Vec vec_from(const json& j) {
  Vec out;
  out.reserve(j.size());
  for (const auto& x : j) out.push_back(x.get<double>());
  return out;
}

}  // namespace

std::string save_vq(const VQModel& model) {
  json j;
  j["version"] = 1;
  json cfg;
  cfg["window"] = model.cfg.window;
  cfg["codebook_size"] = model.cfg.codebook_size;
  cfg["embedding_dim"] = model.cfg.embedding_dim;
  cfg["commitment_beta"] = model.cfg.commitment_beta;
  cfg["encoder_hidden"] = model.cfg.encoder_hidden;
  cfg["decoder_hidden"] = model.cfg.decoder_hidden;
  cfg["learning_rate"] = model.cfg.learning_rate;
  cfg["epochs"] = model.cfg.epochs;
  cfg["batch_size"] = model.cfg.batch_size;
  cfg["seed"] = model.cfg.seed;
  j["config"] = std::move(cfg);
  json shapes;
  shapes["encoder"] = model.encoder.param_count();
  shapes["decoder"] = model.decoder.param_count();
  shapes["codebook"] = model.codebook.size();
  j["shapes"] = std::move(shapes);
  j["encoder"] = vec_json(model.encoder.params());
  j["decoder"] = vec_json(model.decoder.params());
  j["codebook"] = vec_json(model.codebook);
  j["trained"] = model.trained;
  return j.dump();
}

VQModel load_vq(const std::string& text) {
  const json j = json::parse(text);
  const json& c = j.at("config");
  VQConfig cfg;
  cfg.window = c.at("window").get<int>();
  cfg.codebook_size = c.at("codebook_size").get<int>();
  cfg.embedding_dim = c.at("embedding_dim").get<int>();
  cfg.commitment_beta = c.at("commitment_beta").get<double>();
  cfg.encoder_hidden = c.at("encoder_hidden").get<std::vector<int>>();
  cfg.decoder_hidden = c.at("decoder_hidden").get<std::vector<int>>();
  cfg.learning_rate = c.at("learning_rate").get<double>();
  cfg.epochs = c.at("epochs").get<int>();
  cfg.batch_size = c.at("batch_size").get<int>();
  cfg.seed = c.at("seed").get<std::uint64_t>();
  VQModel model(cfg);
  const json& shapes = j.at("shapes");
  if (shapes.at("encoder").get<int>() != model.encoder.param_count() ||
      shapes.at("decoder").get<int>() != model.decoder.param_count() ||
      shapes.at("codebook").get<std::size_t>() != model.codebook.size()) {
    throw ShapeMismatch("checkpoint shapes disagree with config");
  }
  model.encoder.params() = vec_from(j.at("encoder"));
  model.decoder.params() = vec_from(j.at("decoder"));
  model.codebook = vec_from(j.at("codebook"));
  if (model.encoder.params().size() !=
          static_cast<std::size_t>(model.encoder.param_count()) ||
      model.decoder.params().size() !=
          static_cast<std::size_t>(model.decoder.param_count())) {
    throw ShapeMismatch("weight array lengths disagree with shapes");
  }
  model.trained = j.at("trained").get<bool>();
  return model;
}

}  // namespace openha::vq
