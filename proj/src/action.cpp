#include "openha/action.hpp"

#include <cmath>

#include "json.hpp"

namespace openha {

namespace {

constexpr std::string_view kButtonLabels[kNumButtons] = {
    "ESC",      "back",     "drop",     "forward",  "hotbar.1", "hotbar.2",
    "hotbar.3", "hotbar.4", "hotbar.5", "hotbar.6", "hotbar.7", "hotbar.8",
    "hotbar.9", "inventory", "jump",    "left",     "right",    "sneak",
    "sprint",   "swapHands", "attack",  "use",      "pickItem",
};

// Companding to [-1, 1].
double compand(double delta, const CameraBinConfig& cfg) {
  const double x = delta / cfg.max_degrees;
  const double sign = x < 0 ? -1.0 : 1.0;
  return sign * std::log1p(cfg.mu * std::fabs(x)) / std::log1p(cfg.mu);
}

double expand(double c, const CameraBinConfig& cfg) {
  const double sign = c < 0 ? -1.0 : 1.0;
  return sign * cfg.max_degrees / cfg.mu *
         (std::pow(1.0 + cfg.mu, std::fabs(c)) - 1.0);
}

}  // namespace

std::string_view button_label(ButtonName b) {
  return kButtonLabels[static_cast<int>(b)];
}

EnvAction null_action() { return EnvAction{}; }

int quantize_camera_axis(double delta, const CameraBinConfig& cfg) {
  if (!std::isfinite(delta) || std::fabs(delta) > cfg.max_degrees) {
    throw OutOfRangeError("camera delta out of range: " +
                          std::to_string(delta));
  }
  const double c = compand(delta, cfg);  // in [-1, 1]
  int bin = static_cast<int>(std::floor((c + 1.0) / 2.0 * cfg.bins_per_axis));
  if (bin < 0) bin = 0;
  if (bin >= cfg.bins_per_axis) bin = cfg.bins_per_axis - 1;
  return bin;
}

double dequantize_camera_axis(int bin, const CameraBinConfig& cfg) {
  if (bin < 0 || bin >= cfg.bins_per_axis) {
    throw InvalidBinError("camera bin out of range: " + std::to_string(bin));
  }
  // Bin center in companded space. The center bin maps exactly to 0.
  const double c = -1.0 + (2.0 * bin + 1.0) / cfg.bins_per_axis;
  if (bin == cfg.center_bin()) return 0.0;
  return expand(c, cfg);
}

std::pair<int, int> quantize_camera(double pitch, double yaw,
                                    const CameraBinConfig& cfg) {
  return {quantize_camera_axis(pitch, cfg), quantize_camera_axis(yaw, cfg)};
}

std::pair<double, double> dequantize_camera(int pitch_bin, int yaw_bin,
                                            const CameraBinConfig& cfg) {
  return {dequantize_camera_axis(pitch_bin, cfg),
          dequantize_camera_axis(yaw_bin, cfg)};
}

EnvAction grid_to_env(const GridAction& ga, const GridMapConfig& cfg) {
  EnvAction a;
  switch (ga.kind) {
    case GridActionKind::MoveForward:
      a.set(ButtonName::Forward);
      break;
    case GridActionKind::MoveBack:
      a.set(ButtonName::Back);
      break;
    case GridActionKind::StrafeLeft:
      a.set(ButtonName::Left);
      break;
    case GridActionKind::StrafeRight:
      a.set(ButtonName::Right);
      break;
    case GridActionKind::TurnLeft:
      a.camera_yaw = -cfg.turn_degrees;
      break;
    case GridActionKind::TurnRight:
      a.camera_yaw = cfg.turn_degrees;
      break;
    case GridActionKind::LookUp:
      a.camera_pitch = -cfg.look_degrees;
      break;
    case GridActionKind::LookDown:
      a.camera_pitch = cfg.look_degrees;
      break;
    case GridActionKind::Jump:
      a.set(ButtonName::Jump);
      break;
    case GridActionKind::Attack:
      a.set(ButtonName::Attack);
      break;
    case GridActionKind::Use:
      a.set(ButtonName::Use);
      break;
    case GridActionKind::Hotbar:
      a.buttons[static_cast<int>(ButtonName::Hotbar1) + ga.hotbar_slot - 1] = 1;
      break;
    case GridActionKind::OpenInventory:
      a.set(ButtonName::Inventory);
      break;
    case GridActionKind::CursorMove:
      a.camera_yaw = ga.cursor_dx * cfg.cursor_degrees_per_cell;
      a.camera_pitch = ga.cursor_dy * cfg.cursor_degrees_per_cell;
      break;
    case GridActionKind::Click:
      // GUI clicks ride on the middle-mouse button so Click stays distinct
      // from Attack; MineGrid treats attack and pickItem alike in GuiMode.
      a.set(ButtonName::PickItem);
      break;
    case GridActionKind::NoOp:
      break;
  }
  return a;
}

GridAction env_to_grid(const EnvAction& a, const GridMapConfig& cfg) {
  using K = GridActionKind;
  if (a.pressed(ButtonName::Attack)) return GridAction::simple(K::Attack);
  if (a.pressed(ButtonName::Use)) return GridAction::simple(K::Use);
  if (a.pressed(ButtonName::PickItem)) return GridAction::simple(K::Click);
  if (a.pressed(ButtonName::Inventory))
    return GridAction::simple(K::OpenInventory);
  for (int s = 1; s <= 9; ++s) {
    if (a.buttons[static_cast<int>(ButtonName::Hotbar1) + s - 1])
      return GridAction::hotbar(s);
  }
  if (a.pressed(ButtonName::Jump)) return GridAction::simple(K::Jump);
  if (a.pressed(ButtonName::Forward)) return GridAction::simple(K::MoveForward);
  if (a.pressed(ButtonName::Back)) return GridAction::simple(K::MoveBack);
  if (a.pressed(ButtonName::Left)) return GridAction::simple(K::StrafeLeft);
  if (a.pressed(ButtonName::Right)) return GridAction::simple(K::StrafeRight);

  const double p = a.camera_pitch;
  const double y = a.camera_yaw;
  if (p == 0.0 && y == 0.0) return GridAction::simple(K::NoOp);
  // Exact single-axis turn/look quanta first.
  if (p == 0.0 && y == -cfg.turn_degrees) return GridAction::simple(K::TurnLeft);
  if (p == 0.0 && y == cfg.turn_degrees) return GridAction::simple(K::TurnRight);
  if (y == 0.0 && p == -cfg.look_degrees) return GridAction::simple(K::LookUp);
  if (y == 0.0 && p == cfg.look_degrees) return GridAction::simple(K::LookDown);
  // Cursor lattice.
  const double cd = cfg.cursor_degrees_per_cell;
  const double dx = y / cd;
  const double dy = p / cd;
  const double bound = cfg.max_cursor_cells;
  if (dx == std::floor(dx) && dy == std::floor(dy) && std::fabs(dx) <= bound &&
      std::fabs(dy) <= bound) {
    return GridAction::cursor(static_cast<int>(dx), static_cast<int>(dy));
  }
  // Fallback: dominant axis.
  if (std::fabs(y) >= std::fabs(p)) {
    return GridAction::simple(y < 0 ? K::TurnLeft : K::TurnRight);
  }
  return GridAction::simple(p < 0 ? K::LookUp : K::LookDown);
}

std::string env_to_json(const EnvAction& a) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json buttons;
  for (int b = 0; b < kNumButtons; ++b) {
    buttons[std::string(button_label(static_cast<ButtonName>(b)))] =
        static_cast<int>(a.buttons[static_cast<std::size_t>(b)]);
  }
  j["buttons"] = std::move(buttons);
  j["camera"] = {a.camera_pitch, a.camera_yaw};
  return j.dump();
}

EnvAction env_from_json(const std::string& s) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(s);
  } catch (const nlohmann::ordered_json::exception& e) {
    throw BadRecordError(std::string("env record is not JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("buttons") || !j.contains("camera") ||
      j.size() != 2) {
    throw BadRecordError("env record needs exactly buttons and camera");
  }
  const auto& buttons = j.at("buttons");
  if (!buttons.is_object() ||
      buttons.size() != static_cast<std::size_t>(kNumButtons)) {
    throw BadRecordError("env record must list all button keys");
  }
  EnvAction a;
  for (int b = 0; b < kNumButtons; ++b) {
    const std::string key(button_label(static_cast<ButtonName>(b)));
    if (!buttons.contains(key)) {
      throw BadRecordError("env record missing button " + key);
    }
    const auto& v = buttons.at(key);
    if (!v.is_number_integer() || (v.get<int>() != 0 && v.get<int>() != 1)) {
      throw BadRecordError("button state must be 0 or 1: " + key);
    }
    a.buttons[static_cast<std::size_t>(b)] =
        static_cast<std::uint8_t>(v.get<int>());
  }
  const auto& cam = j.at("camera");
  if (!cam.is_array() || cam.size() != 2 || !cam[0].is_number() ||
      !cam[1].is_number()) {
    throw BadRecordError("camera must be [pitch, yaw]");
  }
  a.camera_pitch = cam[0].get<double>();
  a.camera_yaw = cam[1].get<double>();
  return a;
}

}  // namespace openha
