#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace openha {

// The 23 binary controls of the primitive action schema, in canonical
// serialization order. Camera is carried separately as a pair of degree
// deltas.
enum class ButtonName : int {
  Esc = 0,
  Back,
  Drop,
  Forward,
  Hotbar1,
  Hotbar2,
  Hotbar3,
  Hotbar4,
  Hotbar5,
  Hotbar6,
  Hotbar7,
  Hotbar8,
  Hotbar9,
  Inventory,
  Jump,
  Left,
  Right,
  Sneak,
  Sprint,
  SwapHands,
  Attack,
  Use,
  PickItem,
};

inline constexpr int kNumButtons = 23;

std::string_view button_label(ButtonName b);  // e.g. "hotbar.3"

struct BadRecordError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct OutOfRangeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidBinError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Primitive environmental action: raw button state plus a camera delta in
// degrees (pitch, yaw), each in [-180, 180]. Simultaneous presses are legal
// here; representability is the codec layer's concern.
struct EnvAction {
  std::array<std::uint8_t, kNumButtons> buttons{};
  double camera_pitch = 0.0;
  double camera_yaw = 0.0;

  bool pressed(ButtonName b) const {
    return buttons[static_cast<int>(b)] != 0;
  }
  void set(ButtonName b, bool down = true) {
    buttons[static_cast<int>(b)] = down ? 1 : 0;
  }
  bool operator==(const EnvAction&) const = default;
};

EnvAction null_action();

// JSON record {"buttons": {"ESC": 0, ..., "pickItem": 0}, "camera": [pitch,
// yaw]}. All 23 keys are always present, ordered as the ButtonName
// enumeration, so output is byte-stable.
std::string env_to_json(const EnvAction& a);
EnvAction env_from_json(const std::string& s);  // BadRecordError on malformed

// Mu-law camera discretization. bins_per_axis is odd so the zero delta has a
// dedicated center bin.
struct CameraBinConfig {
  int bins_per_axis = 11;
  double mu = 10.0;
  double max_degrees = 180.0;

  int center_bin() const { return (bins_per_axis - 1) / 2; }
  bool operator==(const CameraBinConfig&) const = default;
};

int quantize_camera_axis(double delta, const CameraBinConfig& cfg);
double dequantize_camera_axis(int bin, const CameraBinConfig& cfg);

std::pair<int, int> quantize_camera(double pitch, double yaw,
                                    const CameraBinConfig& cfg);
std::pair<double, double> dequantize_camera(int pitch_bin, int yaw_bin,
                                            const CameraBinConfig& cfg);

// MineGrid-native control vocabulary.
enum class GridActionKind : int {
  MoveForward = 0,
  MoveBack,
  StrafeLeft,
  StrafeRight,
  TurnLeft,
  TurnRight,
  LookUp,
  LookDown,
  Jump,
  Attack,
  Use,
  Hotbar,      // carries slot 1..9
  OpenInventory,
  CursorMove,  // carries (dx, dy) in GUI cells
  Click,
  NoOp,
};

struct GridAction {
  GridActionKind kind = GridActionKind::NoOp;
  int hotbar_slot = 0;  // Hotbar only
  int cursor_dx = 0;    // CursorMove only
  int cursor_dy = 0;

  static GridAction simple(GridActionKind k) { return GridAction{k, 0, 0, 0}; }
  static GridAction hotbar(int slot) {
    return GridAction{GridActionKind::Hotbar, slot, 0, 0};
  }
  static GridAction cursor(int dx, int dy) {
    return GridAction{GridActionKind::CursorMove, 0, dx, dy};
  }
  bool operator==(const GridAction&) const = default;
};

struct GridMapConfig {
  double turn_degrees = 15.0;             // TurnLeft yaw = -turn_degrees
  double look_degrees = 15.0;             // LookUp pitch = -look_degrees
  double cursor_degrees_per_cell = 5.0;
  int max_cursor_cells = 2;               // per-action cursor bound
};

EnvAction grid_to_env(const GridAction& ga, const GridMapConfig& cfg = {});

// Total function: non-representable EnvActions resolve by the fixed priority
// attack > use > pick > inventory > hotbar > jump > movement > camera.
GridAction env_to_grid(const EnvAction& a, const GridMapConfig& cfg = {});

}  // namespace openha
