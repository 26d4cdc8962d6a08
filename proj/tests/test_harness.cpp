#include <cmath>
#include <sstream>

#include "doctest.h"
#include "openha/harness.hpp"

using namespace openha;
using harness::CategoryReport;
using harness::EpisodeResult;
using minegrid::TaskCategory;

namespace {

policy::ActionNet make_net(policy::ModelKind kind, std::uint64_t seed,
                           int hidden = 16) {
  policy::PolicyConfig cfg;
  cfg.kind = kind;
  cfg.hidden = hidden;
  cfg.codebook_size = 8;
  policy::ActionNet net(cfg);
  Rng rng(seed);
  net.init(rng);
  return net;
}

vq::VQModel make_tiny_vq(std::uint64_t seed) {
  vq::VQConfig cfg;
  cfg.window = 4;
  cfg.codebook_size = 8;
  cfg.embedding_dim = 8;
  cfg.encoder_hidden = {16};
  cfg.decoder_hidden = {16};
  cfg.epochs = 2;
  cfg.seed = seed;
  std::vector<vq::ActionWindow> corpus;
  Rng rng(seed);
  for (int i = 0; i < 32; ++i) {
    vq::ActionWindow w;
    for (int t = 0; t < cfg.window; ++t) {
      EnvAction a;
      a.set(ButtonName::Forward, (i + t) % 2 == 0);
      w.actions.push_back(a);
    }
    corpus.push_back(w);
  }
  return vq::train_vq(corpus, cfg).model;
}

}  // namespace

TEST_CASE("fast mode calls high level every k steps") {
  auto net = make_net(policy::ModelKind::UnifiedCoA, 7);
  auto bundle = harness::unified_bundle(net, codecs::SpaceTag::Motion);
  const auto& task = minegrid::task_by_id("approach_sheep");
  for (int k : {1, 3, 8}) {
    auto r = harness::run_episode(bundle, harness::fast_mode(k), task, 5, true);
    CHECK(r.steps > 0);
    CHECK(r.steps <= task.max_steps);
    CHECK(r.cost.high_level_calls == (r.steps + k - 1) / k);
    CHECK(r.cost.low_level_calls == r.steps);
  }
}

TEST_CASE("slow mode calls high level every step") {
  auto net = make_net(policy::ModelKind::UnifiedCoA, 7);
  auto bundle = harness::unified_bundle(net, codecs::SpaceTag::Motion);
  const auto& task = minegrid::task_by_id("approach_sheep");
  auto r = harness::run_episode(bundle, harness::slow_mode(), task, 5, true);
  CHECK(r.cost.high_level_calls == r.steps);
  CHECK(r.cost.low_level_calls == r.steps);
}

TEST_CASE("mode model mismatch errors") {
  auto unified = make_net(policy::ModelKind::UnifiedCoA, 1);
  auto flat = make_net(policy::ModelKind::Flat, 2);
  auto high = make_net(policy::ModelKind::HighLevel, 3);
  auto low = make_net(policy::ModelKind::LowLevel, 4);
  const auto& task = minegrid::task_by_id("approach_sheep");

  CHECK_THROWS_AS(harness::run_episode(harness::flat_bundle(flat),
                                       harness::slow_mode(), task, 1),
                  harness::ModeModelMismatch);
  CHECK_THROWS_AS(
      harness::run_episode(
          harness::hierarchical_bundle(high, low, codecs::SpaceTag::Motion),
          harness::slow_mode(), task, 1),
      harness::ModeModelMismatch);
  CHECK_THROWS_AS(
      harness::run_episode(
          harness::hierarchical_bundle(flat, low, codecs::SpaceTag::Motion),
          harness::fast_mode(), task, 1),
      harness::ModeModelMismatch);
  CHECK_THROWS_AS(
      harness::run_episode(
          harness::hierarchical_bundle(high, flat, codecs::SpaceTag::Motion),
          harness::fast_mode(), task, 1),
      harness::ModeModelMismatch);
  CHECK_NOTHROW(harness::run_episode(
      harness::hierarchical_bundle(high, low, codecs::SpaceTag::Motion),
      harness::fast_mode(), task, 1));
}

TEST_CASE("episodes are deterministic, greedy and sampled") {
  auto net = make_net(policy::ModelKind::UnifiedCoA, 11);
  auto bundle = harness::unified_bundle(net, codecs::SpaceTag::Grounding);
  const auto& task = minegrid::task_by_id("chop_oak");
  for (bool greedy : {true, false}) {
    auto a = harness::run_episode(bundle, harness::fast_mode(8), task, 3, greedy);
    auto b = harness::run_episode(bundle, harness::fast_mode(8), task, 3, greedy);
    CHECK(a.task == b.task);
    CHECK(a.success == b.success);
    CHECK(a.steps == b.steps);
    CHECK(a.cost.high_level_calls == b.cost.high_level_calls);
    CHECK(a.cost.low_level_calls == b.cost.low_level_calls);
  }
}

TEST_CASE("latent bundles stream env actions through the vq decoder") {
  auto net = make_net(policy::ModelKind::UnifiedCoA, 13);
  auto model = make_tiny_vq(5);
  auto bundle = harness::unified_bundle(net, codecs::SpaceTag::Latent, &model);
  const auto& task = minegrid::task_by_id("approach_sheep");
  auto fast = harness::run_episode(bundle, harness::fast_mode(4), task, 2, true);
  CHECK(fast.cost.high_level_calls == (fast.steps + 3) / 4);
  auto slow = harness::run_episode(bundle, harness::slow_mode(), task, 2, true);
  CHECK(slow.cost.high_level_calls == slow.steps);
  auto wrong =
      harness::unified_bundle(net, codecs::SpaceTag::Motion, &model);
  CHECK_THROWS_AS(harness::run_episode(wrong, harness::slow_mode(), task, 2),
                  harness::ModeModelMismatch);
}

TEST_CASE("scripted expert succeeds at 95 percent per category") {
  harness::EvalConfig cfg;
  for (const auto& t : minegrid::task_suite()) cfg.tasks.push_back(t.id);
  cfg.seeds_per_task = 8;
  cfg.first_seed = 1;
  auto rep = harness::evaluate(harness::scripted_bundle(), harness::fast_mode(),
                               cfg, "expert");
  for (TaskCategory c :
       {TaskCategory::Embodied, TaskCategory::GUI, TaskCategory::Combat}) {
    const auto& st = rep.categories.at(c);
    CHECK(st.tasks >= 4);
    double pooled =
        static_cast<double>(st.successes) / static_cast<double>(st.episodes);
    CHECK(pooled >= 0.95);
  }
}

TEST_CASE("evaluate counts and aggregation invariants") {
  auto net = make_net(policy::ModelKind::UnifiedCoA, 17);
  auto bundle = harness::unified_bundle(net, codecs::SpaceTag::Motion);
  harness::EvalConfig cfg;
  cfg.tasks = {"approach_sheep", "chop_oak", "craft_planks", "kill_sheep"};
  cfg.seeds_per_task = 3;
  cfg.mini_tasks = {"approach_sheep"};
  cfg.mini_runs_per_task = 10;
  cfg.max_steps = 40;
  auto rep = harness::evaluate(bundle, harness::fast_mode(8), cfg, "motion");
  CHECK(rep.episodes.size() == 12);
  CHECK(rep.mini_episodes.size() == 10);
  for (const auto& e : rep.episodes) {
    CHECK(e.steps <= 40);
    if (!e.success) CHECK(e.steps == 40);
  }

  // Aggregates are a pure function of the raw episodes.
  auto again = harness::aggregate("motion", "fast", rep.episodes,
                                  rep.mini_episodes);
  for (const auto& [cat, st] : rep.categories) {
    const auto& st2 = again.categories.at(cat);
    CHECK(st.sr_mean == st2.sr_mean);
    CHECK(st.sr_std == st2.sr_std);
    CHECK(st.steps_mean == st2.steps_mean);
    CHECK(st.steps_success_mean == st2.steps_success_mean);
    CHECK(st.mini_sr_mean == st2.mini_sr_mean);
    CHECK(st.cost_ratio == st2.cost_ratio);
  }
  // Fast k=8: each task contributes ll/hl close to 8; pooled ratio <= 8.
  const auto& emb = rep.categories.at(TaskCategory::Embodied);
  CHECK(emb.cost_ratio > 1.0);
  CHECK(emb.cost_ratio <= 8.0);

  CHECK_THROWS_AS(
      harness::evaluate(bundle, harness::fast_mode(),
                        harness::EvalConfig{{"approach_sheep"}, 2}, "x"),
      std::invalid_argument);
}

TEST_CASE("evaluate is order independent across thread counts") {
  auto net = make_net(policy::ModelKind::UnifiedCoA, 23);
  auto bundle = harness::unified_bundle(net, codecs::SpaceTag::Motion);
  harness::EvalConfig cfg;
  cfg.tasks = {"approach_sheep", "chop_oak"};
  cfg.seeds_per_task = 3;
  cfg.max_steps = 30;
  cfg.greedy = false;
  auto serial = harness::evaluate(bundle, harness::fast_mode(8), cfg, "m", 1);
  auto parallel = harness::evaluate(bundle, harness::fast_mode(8), cfg, "m", 4);
  REQUIRE(serial.episodes.size() == parallel.episodes.size());
  for (std::size_t i = 0; i < serial.episodes.size(); ++i) {
    CHECK(serial.episodes[i].task == parallel.episodes[i].task);
    CHECK(serial.episodes[i].seed == parallel.episodes[i].seed);
    CHECK(serial.episodes[i].success == parallel.episodes[i].success);
    CHECK(serial.episodes[i].steps == parallel.episodes[i].steps);
  }
}

namespace {

// Synthetic reports with controlled success counts, one Embodied task.
CategoryReport synthetic_report(const std::string& model, int successes,
                                int n, std::uint64_t first_seed = 1) {
  std::vector<EpisodeResult> eps;
  for (int i = 0; i < n; ++i) {
    EpisodeResult e;
    e.task = "approach_sheep";
    e.seed = first_seed + static_cast<std::uint64_t>(i);
    e.success = i < successes;
    e.steps = e.success ? 10 : 50;
    e.cost = {5, 40};
    eps.push_back(e);
  }
  return harness::aggregate(model, "fast", eps, {});
}

}  // namespace

TEST_CASE("compare matches the closed-form z test") {
  auto a = synthetic_report("a", 0, 100);
  auto b = synthetic_report("b", 100, 100);
  auto cells = harness::compare(a, b);
  CHECK(cells.at(TaskCategory::Embodied).delta == doctest::Approx(-1.0));
  CHECK(cells.at(TaskCategory::Embodied).p_value < 1e-6);

  // 50% vs 55% over 20 episodes: z = -0.05 / sqrt(0.525*0.475*(2/20)).
  auto c = synthetic_report("c", 10, 20);
  auto d = synthetic_report("d", 11, 20);
  auto cd = harness::compare(c, d);
  double z = -0.05 / std::sqrt(0.525 * 0.475 * (2.0 / 20.0));
  double p = std::erfc(std::abs(z) / std::sqrt(2.0));
  CHECK(cd.at(TaskCategory::Embodied).delta == doctest::Approx(-0.05));
  CHECK(cd.at(TaskCategory::Embodied).p_value == doctest::Approx(p));
  CHECK(cd.at(TaskCategory::Embodied).p_value > 0.05);

  auto self = harness::compare(a, a);
  CHECK(self.at(TaskCategory::Embodied).delta == 0.0);
  CHECK(self.at(TaskCategory::Embodied).p_value == 1.0);

  auto shifted = synthetic_report("e", 10, 20, 100);
  CHECK_THROWS_AS(harness::compare(c, shifted), harness::SuiteMismatch);
  CHECK_THROWS_AS(harness::compare(a, c), harness::SuiteMismatch);
}

TEST_CASE("report renders markdown and csv with pm formatting") {
  harness::EvalConfig cfg;
  cfg.tasks = {"approach_sheep", "craft_planks", "kill_sheep"};
  cfg.seeds_per_task = 3;
  cfg.mini_tasks = {"approach_sheep"};
  cfg.mini_runs_per_task = 10;
  auto rep = harness::evaluate(harness::scripted_bundle(), harness::fast_mode(),
                               cfg, "expert");
  auto doc = harness::render_report({rep});

  // One data row, nine mean-std cells.
  std::size_t rows = 0, cells = 0;
  std::istringstream md(doc.markdown);
  std::string line;
  while (std::getline(md, line)) {
    if (line.rfind("| expert", 0) == 0) {
      ++rows;
      for (std::size_t pos = line.find("^{±"); pos != std::string::npos;
           pos = line.find("^{±", pos + 1)) {
        ++cells;
      }
    }
  }
  CHECK(rows == 1);
  CHECK(cells == 9);

  // CSV round-trips the in-memory aggregates within formatting precision.
  std::istringstream csv(doc.csv);
  std::string header, row;
  REQUIRE(std::getline(csv, header));
  REQUIRE(std::getline(csv, row));
  std::vector<std::string> fields;
  std::istringstream rs(row);
  std::string f;
  while (std::getline(rs, f, ',')) fields.push_back(f);
  REQUIRE(fields.size() == 2 + 3 * 6 + 1);
  CHECK(fields[0] == "expert");
  CHECK(fields[1] == "fast");
  const TaskCategory cats[] = {TaskCategory::Embodied, TaskCategory::GUI,
                               TaskCategory::Combat};
  for (int c = 0; c < 3; ++c) {
    const auto& st = rep.categories.at(cats[c]);
    double vals[] = {st.steps_mean, st.steps_std,   st.mini_sr_mean,
                     st.mini_sr_std, st.sr_mean, st.sr_std};
    for (int k = 0; k < 6; ++k) {
      CHECK(std::abs(std::stod(fields[2 + 6 * c + k]) - vals[k]) <= 1e-6);
    }
  }
}

TEST_CASE("fast k equals 8 reports cost ratio 8.0") {
  std::vector<EpisodeResult> eps;
  for (int i = 0; i < 3; ++i) {
    EpisodeResult e;
    e.task = "approach_sheep";
    e.seed = static_cast<std::uint64_t>(i + 1);
    e.success = true;
    e.steps = 16;
    e.cost = {2, 16};  // 16 steps, k = 8
    eps.push_back(e);
  }
  auto rep = harness::aggregate("m", "fast", eps, {});
  CHECK(rep.categories.at(TaskCategory::Embodied).cost_ratio ==
        doctest::Approx(8.0));
  auto doc = harness::render_report({rep});
  CHECK(doc.markdown.find(" 8.0 |") != std::string::npos);
}

TEST_CASE("report regenerates bit exactly from persisted jsonl") {
  harness::EvalConfig cfg;
  cfg.tasks = {"approach_sheep", "chop_oak"};
  cfg.seeds_per_task = 3;
  cfg.mini_tasks = {"chop_oak"};
  cfg.mini_runs_per_task = 10;
  auto rep = harness::evaluate(harness::scripted_bundle(), harness::fast_mode(),
                               cfg, "expert");
  auto main2 = harness::episodes_from_jsonl(harness::episodes_to_jsonl(rep.episodes));
  auto mini2 =
      harness::episodes_from_jsonl(harness::episodes_to_jsonl(rep.mini_episodes));
  auto rep2 = harness::aggregate("expert", "fast", main2, mini2);
  CHECK(harness::render_report({rep}).markdown ==
        harness::render_report({rep2}).markdown);
  CHECK(harness::render_report({rep}).csv == harness::render_report({rep2}).csv);
}

TEST_CASE("motion only agents score zero on gui tasks") {
  // Structural: motion abstractions cannot click, so any motion-space bundle
  // fails every GUI task regardless of weights.
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    auto net = make_net(policy::ModelKind::UnifiedCoA, seed);
    auto bundle = harness::unified_bundle(net, codecs::SpaceTag::Motion);
    for (const auto& task : minegrid::task_suite()) {
      if (task.category != TaskCategory::GUI) continue;
      auto r = harness::run_episode(bundle, harness::fast_mode(8), task, seed,
                                    false, 60);
      CHECK_FALSE(r.success);
    }
  }
}
