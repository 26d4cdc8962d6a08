#include <cmath>
#include <set>

#include "doctest.h"
#include "openha/vq.hpp"

using namespace openha;
using namespace openha::vq;
using nn::Vec;

namespace {

EnvAction act(std::initializer_list<ButtonName> btns, double pitch = 0.0,
              double yaw = 0.0) {
  EnvAction a = null_action();
  for (ButtonName b : btns) a.set(b, true);
  a.camera_pitch = pitch;
  a.camera_yaw = yaw;
  return a;
}

ActionWindow repeat_action(const EnvAction& a, int n) {
  ActionWindow w;
  w.actions.assign(n, a);
  return w;
}

EnvAction random_action(Rng& rng) {
  GroupIndices g;
  g.movement = rng.next_int(0, 8);
  g.pitch = rng.next_int(0, 10);
  g.yaw = rng.next_int(0, 10);
  g.interaction = rng.next_int(0, 3);
  return action_from_groups(g);
}

ActionWindow random_window(Rng& rng, int len) {
  ActionWindow w;
  for (int i = 0; i < len; ++i) w.actions.push_back(random_action(rng));
  return w;
}

// Five repeated motion motifs with small variations; 13 distinct windows.
std::vector<ActionWindow> motif_corpus(int window_len, int copies) {
  std::vector<ActionWindow> motifs;
  motifs.push_back(repeat_action(act({ButtonName::Forward}), window_len));
  for (double v : {-3.0, -6.0, -12.0}) {
    motifs.push_back(
        repeat_action(act({ButtonName::Forward}, 0.0, v), window_len));
  }
  motifs.push_back(repeat_action(act({ButtonName::Attack}), window_len));
  {
    ActionWindow burst;
    for (int t = 0; t < window_len; ++t) {
      burst.actions.push_back(t % 2 == 0 ? act({ButtonName::Attack})
                                         : null_action());
    }
    motifs.push_back(burst);
    ActionWindow burst2;
    for (int t = 0; t < window_len; ++t) {
      burst2.actions.push_back(t % 2 == 1 ? act({ButtonName::Attack})
                                          : null_action());
    }
    motifs.push_back(burst2);
  }
  motifs.push_back(repeat_action(act({ButtonName::Left}), window_len));
  motifs.push_back(repeat_action(act({ButtonName::Right}), window_len));
  motifs.push_back(
      repeat_action(act({ButtonName::Forward, ButtonName::Left}), window_len));
  motifs.push_back(
      repeat_action(act({ButtonName::Forward, ButtonName::Jump}), window_len));
  motifs.push_back(repeat_action(act({}, 0.0, 8.0), window_len));
  motifs.push_back(repeat_action(null_action(), window_len));

  std::vector<ActionWindow> corpus;
  for (int c = 0; c < copies; ++c) {
    for (const auto& m : motifs) corpus.push_back(m);
  }
  return corpus;
}

bool windows_equal(const ActionWindow& a, const ActionWindow& b) {
  if (a.actions.size() != b.actions.size()) return false;
  for (std::size_t i = 0; i < a.actions.size(); ++i) {
    if (!(group_indices(a.actions[i]) == group_indices(b.actions[i]))) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("group indices round-trip and reduce conflicts") {
  Rng rng(9);
  for (int i = 0; i < 500; ++i) {
    GroupIndices g;
    g.movement = rng.next_int(0, 8);
    g.pitch = rng.next_int(0, 10);
    g.yaw = rng.next_int(0, 10);
    g.interaction = rng.next_int(0, 3);
    CHECK(group_indices(action_from_groups(g)) == g);
  }
  // Conflicting opposite keys drop to no movement.
  CHECK(group_indices(act({ButtonName::Forward, ButtonName::Back})).movement ==
        0);
  // Interaction priority: attack over use over jump.
  CHECK(group_indices(act({ButtonName::Attack, ButtonName::Use})).interaction ==
        1);
  CHECK(group_indices(act({ButtonName::Use, ButtonName::Jump})).interaction ==
        2);
}

TEST_CASE("quantize: singleton, exact match, brute-force oracle, ties") {
  const int d = 4;
  Rng rng(17);

  Vec single(d);
  for (double& x : single) x = rng.next_gaussian();
  Vec z(d, 0.0);
  CHECK(quantize(z, single, d).code == 0);

  Vec codebook(64 * d);
  for (double& x : codebook) x = rng.next_gaussian();
  for (int trial = 0; trial < 1000; ++trial) {
    Vec q(d);
    for (double& x : q) x = rng.next_gaussian();
    int best = 0;
    double best_d = 1e300;
    for (int k = 0; k < 64; ++k) {
      double dist = 0.0;
      for (int i = 0; i < d; ++i) {
        const double diff = q[i] - codebook[k * d + i];
        dist += diff * diff;
      }
      if (dist < best_d) {
        best_d = dist;
        best = k;
      }
    }
    CHECK(quantize(q, codebook, d).code == best);
  }

  Vec exact(codebook.begin() + 7 * d, codebook.begin() + 8 * d);
  CHECK(quantize(exact, codebook, d).code == 7);

  // Duplicate rows resolve to the lowest index.
  std::copy(codebook.begin() + 7 * d, codebook.begin() + 8 * d,
            codebook.begin() + 21 * d);
  CHECK(quantize(exact, codebook, d).code == 7);

  CHECK_THROWS_AS(quantize(z, Vec{}, d), EmptyCodebook);
}

TEST_CASE("vq_loss: uniform-logit entropy oracle and decomposition") {
  VQConfig cfg;
  VQModel model(cfg);
  Rng rng(23);
  model.encoder.init(rng);
  model.decoder.init(rng);
  for (double& x : model.codebook) x = rng.next_gaussian() * 0.1;

  const double expect =
      cfg.window *
      (std::log(9.0) + std::log(11.0) + std::log(11.0) + std::log(4.0));
  double sum_rec = 0.0;
  for (int i = 0; i < 20; ++i) {
    const LossTerms t = vq_loss(model, random_window(rng, cfg.window));
    sum_rec += t.rec;
    CHECK(t.total ==
          doctest::Approx(t.rec + t.codebook_term +
                          cfg.commitment_beta * t.commit_term)
              .epsilon(1e-12));
    CHECK(t.rec >= 0.0);
    CHECK(t.codebook_term >= 0.0);
  }
  CHECK(sum_rec / 20.0 == doctest::Approx(expect).epsilon(0.10));
  CHECK(model.quantize_calls == 20);
  long total_usage = 0;
  for (long u : model.usage) total_usage += u;
  CHECK(total_usage == 20);
}

TEST_CASE("vq_loss: zero gap terms when the codebook matches z_e") {
  VQConfig cfg;
  VQModel model(cfg);
  Rng rng(29);
  model.encoder.init(rng);
  model.decoder.init(rng);
  const ActionWindow w = random_window(rng, cfg.window);
  const Vec z_e = model.encoder.forward(window_features(w, cfg.window));
  std::copy(z_e.begin(), z_e.end(), model.codebook.begin());
  const LossTerms t = vq_loss(model, w);
  CHECK(t.codebook_term == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(t.commit_term == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("vq_loss gradients match central finite differences") {
  VQConfig cfg;
  cfg.window = 2;
  cfg.codebook_size = 3;
  cfg.embedding_dim = 4;
  cfg.encoder_hidden = {8};
  cfg.decoder_hidden = {8};
  VQModel model(cfg);
  Rng rng(31);
  model.encoder.init(rng);
  model.decoder.init(rng);
  for (double& x : model.codebook) x = rng.next_gaussian() * 0.3;
  const ActionWindow w = random_window(rng, cfg.window);

  Vec eg, dg, cg;
  vq_loss_grads(model, w, eg, dg, cg);

  // Base-point constants freeze the stop-gradient structure: the decoder
  // always sees z_e shifted onto the selected row, the gap terms each hold
  // one side fixed.
  const Vec f = window_features(w, cfg.window);
  const Vec ze0 = model.encoder.forward(f);
  const QuantizeResult q0 = quantize(ze0, model.codebook, cfg.embedding_dim);
  const Vec e0 = q0.z_q;

  auto surrogate = [&](const VQModel& m) {
    Vec z_e = m.encoder.forward(f);
    Vec dec_in(cfg.embedding_dim);
    double commit = 0.0, cb_term = 0.0;
    for (int i = 0; i < cfg.embedding_dim; ++i) {
      dec_in[i] = z_e[i] + (e0[i] - ze0[i]);
      const double dc = z_e[i] - e0[i];
      commit += dc * dc;
      const double db =
          ze0[i] - m.codebook[q0.code * cfg.embedding_dim + i];
      cb_term += db * db;
    }
    const Vec logits = m.decoder.forward(dec_in);
    return reconstruction_loss(logits, f, cfg.window) + cb_term +
           cfg.commitment_beta * commit;
  };

  const double h = 1e-5;
  double max_rel = 0.0;
  auto check_block = [&](Vec& params, const Vec& grad) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double save = params[i];
      params[i] = save + h;
      const double up = surrogate(model);
      params[i] = save - h;
      const double dn = surrogate(model);
      params[i] = save;
      const double fd = (up - dn) / (2.0 * h);
      const double rel =
          std::abs(grad[i] - fd) / std::max({std::abs(grad[i]), std::abs(fd), 1e-6});
      max_rel = std::max(max_rel, rel);
    }
  };
  check_block(model.encoder.params(), eg);
  check_block(model.decoder.params(), dg);
  check_block(model.codebook, cg);
  CHECK(max_rel <= 1e-4);
}

TEST_CASE("train_vq on the motif corpus: reconstruction and perplexity") {
  VQConfig cfg;
  cfg.codebook_size = 16;
  cfg.epochs = 40;
  cfg.seed = 5;
  const auto corpus = motif_corpus(cfg.window, 20);
  const auto held_out = motif_corpus(cfg.window, 1);  // the distinct motifs
  TrainedVQ trained = train_vq(corpus, cfg);

  int exact = 0;
  for (const auto& w : held_out) {
    const auto la =
        std::get<codecs::LatentAction>(encode_actions(trained.model, w));
    if (windows_equal(decode_latent(trained.model, la.code), w)) ++exact;
  }
  CHECK(static_cast<double>(exact) / held_out.size() >= 0.9);
  REQUIRE(!trained.curve.empty());
  CHECK(trained.curve.back().perplexity >= 4.0);
  CHECK(trained.curve.back().mean_rec < trained.curve.front().mean_rec);

  // Same seed twice: identical checkpoint bytes.
  TrainedVQ again = train_vq(corpus, cfg);
  CHECK(save_vq(again.model) == save_vq(trained.model));
}

TEST_CASE("train_vq: K=1 on a single motif reconstructs it") {
  VQConfig cfg;
  cfg.codebook_size = 1;
  cfg.epochs = 40;
  cfg.seed = 7;
  const ActionWindow motif =
      repeat_action(act({ButtonName::Forward}), cfg.window);
  std::vector<ActionWindow> corpus(50, motif);
  TrainedVQ trained = train_vq(corpus, cfg);
  CHECK(windows_equal(decode_latent(trained.model, 0), motif));
}

TEST_CASE("encode/decode: self-consistency, surface form, errors") {
  VQConfig cfg;
  cfg.codebook_size = 16;
  cfg.epochs = 40;
  cfg.seed = 5;
  TrainedVQ trained = train_vq(motif_corpus(cfg.window, 20), cfg);
  VQModel& model = trained.model;

  // Codes in live use decode to windows that encode back to themselves.
  std::set<int> live;
  for (const auto& w : motif_corpus(cfg.window, 1)) {
    live.insert(std::get<codecs::LatentAction>(encode_actions(model, w)).code);
  }
  CHECK(live.size() >= 4);
  for (int code : live) {
    const auto back = std::get<codecs::LatentAction>(
        encode_actions(model, decode_latent(model, code)));
    CHECK(back.code == code);
  }

  CHECK(codecs::serialize_abstracted(codecs::LatentAction{2}) ==
        "<|reserved_token_2|>");
  CHECK_THROWS_AS(decode_latent(model, cfg.codebook_size), InvalidCode);
  CHECK_THROWS_AS(decode_latent(model, -1), InvalidCode);

  VQModel fresh(cfg);
  CHECK_THROWS_AS(decode_latent(fresh, 0), UntrainedModel);
  CHECK_THROWS_AS(
      encode_actions(fresh, repeat_action(null_action(), cfg.window)),
      UntrainedModel);
}

TEST_CASE("checkpoint round-trip and shape validation") {
  VQConfig cfg;
  cfg.codebook_size = 8;
  cfg.epochs = 5;
  cfg.seed = 3;
  TrainedVQ trained = train_vq(motif_corpus(cfg.window, 4), cfg);
  const std::string bytes = save_vq(trained.model);
  VQModel loaded = load_vq(bytes);
  CHECK(save_vq(loaded) == bytes);

  // Tampering with a declared shape is rejected.
  std::string bad = bytes;
  const std::string needle = "\"codebook\":" ;
  auto pos = bad.find("\"shapes\"");
  pos = bad.find(needle, pos);
  REQUIRE(pos != std::string::npos);
  bad.insert(pos + needle.size(), "1");
  CHECK_THROWS_AS(load_vq(bad), ShapeMismatch);
}
