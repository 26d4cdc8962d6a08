#include "openha/action.hpp"

#include <cmath>
#include <vector>

#include "doctest.h"
#include "openha/rng.hpp"

using namespace openha;

TEST_CASE("null_action is the zero element") {
  const EnvAction a = null_action();
  for (int i = 0; i < kNumButtons; ++i) CHECK(a.buttons[i] == 0);
  CHECK(a.camera_pitch == 0.0);
  CHECK(a.camera_yaw == 0.0);
}

TEST_CASE("camera quantization center and extremes") {
  const CameraBinConfig cfg;
  CHECK(quantize_camera(0.0, 0.0, cfg) == std::pair{5, 5});
  CHECK(quantize_camera(cfg.max_degrees, cfg.max_degrees, cfg) ==
        std::pair{10, 10});
  CHECK(quantize_camera(-cfg.max_degrees, -cfg.max_degrees, cfg) ==
        std::pair{0, 0});
  CHECK_THROWS_AS(quantize_camera_axis(181.0, cfg), OutOfRangeError);
}

// Boundary-scan oracle: locate a delta's bin by scanning bin intervals in
// companded space, independent of the closed-form quantizer.
namespace {
int oracle_bin(double delta, const CameraBinConfig& cfg) {
  const double c = (delta < 0 ? -1.0 : 1.0) *
                   std::log1p(cfg.mu * std::fabs(delta) / cfg.max_degrees) /
                   std::log1p(cfg.mu);
  for (int b = 0; b < cfg.bins_per_axis; ++b) {
    const double lo = -1.0 + 2.0 * b / cfg.bins_per_axis;
    const double hi = -1.0 + 2.0 * (b + 1) / cfg.bins_per_axis;
    if (c >= lo && (c < hi || b == cfg.bins_per_axis - 1)) return b;
  }
  return -1;
}
}  // namespace

TEST_CASE("table camera example matches boundary-scan oracle") {
  const CameraBinConfig cfg;
  // The (-1, -9) pitch/yaw example record.
  CHECK(quantize_camera_axis(-1.0, cfg) == oracle_bin(-1.0, cfg));
  CHECK(quantize_camera_axis(-9.0, cfg) == oracle_bin(-9.0, cfg));
  Rng rng(17);
  for (int i = 0; i < 2000; ++i) {
    const double d = rng.next_double(-180.0, 180.0);
    CAPTURE(d);
    CHECK(quantize_camera_axis(d, cfg) == oracle_bin(d, cfg));
  }
}

TEST_CASE("dequantize round-trips over all 121 bin pairs") {
  const CameraBinConfig cfg;
  for (int p = 0; p < cfg.bins_per_axis; ++p) {
    for (int y = 0; y < cfg.bins_per_axis; ++y) {
      const auto [pd, yd] = dequantize_camera(p, y, cfg);
      CHECK(quantize_camera(pd, yd, cfg) == std::pair{p, y});
    }
  }
  CHECK(dequantize_camera(5, 5, cfg) == std::pair{0.0, 0.0});
  CHECK_THROWS_AS(dequantize_camera_axis(11, cfg), InvalidBinError);
  CHECK_THROWS_AS(dequantize_camera_axis(-1, cfg), InvalidBinError);
}

TEST_CASE("dequantize is antisymmetric") {
  const CameraBinConfig cfg;
  for (int b = 0; b < cfg.bins_per_axis; ++b) {
    CHECK(dequantize_camera_axis(b, cfg) ==
          doctest::Approx(-dequantize_camera_axis(cfg.bins_per_axis - 1 - b, cfg))
              .epsilon(1e-12));
  }
}

TEST_CASE("quantize is monotone per axis") {
  const CameraBinConfig cfg;
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    double d1 = rng.next_double(-180.0, 180.0);
    double d2 = rng.next_double(-180.0, 180.0);
    if (d1 > d2) std::swap(d1, d2);
    CHECK(quantize_camera_axis(d1, cfg) <= quantize_camera_axis(d2, cfg));
  }
}

namespace {
std::vector<GridAction> all_grid_actions() {
  using K = GridActionKind;
  std::vector<GridAction> out;
  for (K k : {K::MoveForward, K::MoveBack, K::StrafeLeft, K::StrafeRight,
              K::TurnLeft, K::TurnRight, K::LookUp, K::LookDown, K::Jump,
              K::Attack, K::Use, K::OpenInventory, K::Click, K::NoOp}) {
    out.push_back(GridAction::simple(k));
  }
  for (int s = 1; s <= 9; ++s) out.push_back(GridAction::hotbar(s));
  for (int dx = -2; dx <= 2; ++dx) {
    for (int dy = -2; dy <= 2; ++dy) {
      if (dx == 0 && dy == 0) continue;
      out.push_back(GridAction::cursor(dx, dy));
    }
  }
  return out;
}
}  // namespace

TEST_CASE("grid_to_env single-button maps") {
  EnvAction fwd = grid_to_env(GridAction::simple(GridActionKind::MoveForward));
  CHECK(fwd.pressed(ButtonName::Forward));
  CHECK(fwd.camera_yaw == 0.0);
  EnvAction tl = grid_to_env(GridAction::simple(GridActionKind::TurnLeft));
  CHECK(tl.camera_yaw == -15.0);
  CHECK(tl.camera_pitch == 0.0);
  EnvAction lu = grid_to_env(GridAction::simple(GridActionKind::LookUp));
  CHECK(lu.camera_pitch == -15.0);
  EnvAction h3 = grid_to_env(GridAction::hotbar(3));
  CHECK(h3.pressed(ButtonName::Hotbar3));
}

TEST_CASE("grid_to_env is injective and env_to_grid inverts it") {
  const auto actions = all_grid_actions();
  for (std::size_t i = 0; i < actions.size(); ++i) {
    for (std::size_t j = i + 1; j < actions.size(); ++j) {
      CHECK(grid_to_env(actions[i]) != grid_to_env(actions[j]));
    }
  }
  for (const auto& ga : actions) {
    CHECK(env_to_grid(grid_to_env(ga)) == ga);
  }
}

TEST_CASE("env_to_grid priority resolution") {
  EnvAction a;
  a.set(ButtonName::Forward);
  a.set(ButtonName::Attack);
  CHECK(env_to_grid(a).kind == GridActionKind::Attack);
  CHECK(env_to_grid(null_action()).kind == GridActionKind::NoOp);
  EnvAction cam;
  cam.camera_yaw = -37.0;
  CHECK(env_to_grid(cam).kind == GridActionKind::TurnLeft);
}

TEST_CASE("env json record round-trips with all 23 keys in enum order") {
  EnvAction a;
  a.set(ButtonName::Forward);
  a.set(ButtonName::Sprint);
  a.camera_pitch = -1.0;
  a.camera_yaw = 4.0;
  const std::string s = env_to_json(a);
  CHECK(env_from_json(s) == a);
  CHECK(env_to_json(env_from_json(s)) == s);
  // All keys present, first and last per the enumeration order.
  CHECK(s.find("\"ESC\":0") < s.find("\"forward\":1"));
  CHECK(s.find("\"forward\":1") < s.find("\"pickItem\":0"));
  CHECK(s.find("\"camera\":[-1.0,4.0]") != std::string::npos);

  CHECK_THROWS_AS(env_from_json("{\"buttons\":{},\"camera\":[0,0]}"),
                  BadRecordError);
  CHECK_THROWS_AS(env_from_json("not json"), BadRecordError);
}
