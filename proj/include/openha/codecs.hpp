#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "openha/action.hpp"

namespace openha::codecs {

// ---------------------------------------------------------------------------
// Raw reserved-token codec (RA)
// ---------------------------------------------------------------------------

struct TokenId {
  int value = 0;
  bool operator==(const TokenId&) const = default;
};

using TokenSequence = std::vector<TokenId>;

// 35-token vocabulary partitioned into four groups, emitted in fixed order:
//   movement   9 tokens  {none,forward,back} x {none,left,right}
//   pitch     11 tokens  camera pitch bin
//   yaw       11 tokens  camera yaw bin
//   interaction 4 tokens {none, attack, use, jump}
struct RawCodecConfig {
  CameraBinConfig camera;

  static constexpr int kMovementBase = 0;
  static constexpr int kMovementSize = 9;
  static constexpr int kPitchBase = 9;
  static constexpr int kPitchSize = 11;
  static constexpr int kYawBase = 20;
  static constexpr int kYawSize = 11;
  static constexpr int kInteractionBase = 31;
  static constexpr int kInteractionSize = 4;
  static constexpr int kVocabSize = 35;
};

struct NotRepresentableError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct BadLengthError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct WrongGroupError : std::runtime_error {
  explicit WrongGroupError(int position);
  int position;
};
struct UnknownTokenError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

TokenSequence encode_raw(const EnvAction& a, const RawCodecConfig& cfg = {});
EnvAction decode_raw(const TokenSequence& tokens,
                     const RawCodecConfig& cfg = {});

// Number of EnvActions the raw codec can express (9 * 11 * 11 * 4).
constexpr int kRepresentableActionCount = 4356;

// Enumerates the representable set; index in [0, kRepresentableActionCount).
EnvAction representable_action(int index, const RawCodecConfig& cfg = {});

std::string render_token(TokenId t);                 // "<|reserved_token_K|>"
std::string render_tokens(const TokenSequence& ts);  // space-joined markers

// ---------------------------------------------------------------------------
// Text action codec (TA)
// ---------------------------------------------------------------------------

struct GrammarError : std::runtime_error {
  GrammarError(std::size_t position, const std::string& expected);
  std::size_t position;
  std::string expected;
};
struct UnknownKeyNameError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonNumericDeltaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Canonical key-name map (documented in the README). Serialization emits keys
// in fixed canonical order: modifiers first, then letters, then the rest.
std::string_view key_name(ButtonName b);
std::optional<ButtonName> button_from_key_name(std::string_view name);

std::string serialize_text(const EnvAction& a);
EnvAction parse_text(std::string_view s);

// ---------------------------------------------------------------------------
// Abstracted action spaces
// ---------------------------------------------------------------------------

enum class SpaceTag : int { Raw = 0, Text, Motion, Grounding, Skill, Latent };

std::string_view space_name(SpaceTag t);  // "raw" | "text" | ...
std::optional<SpaceTag> space_from_name(std::string_view s);

enum class MotionVerb : int {
  GoForward = 0,
  GoBackward,
  StrafeLeft,
  StrafeRight,
  TurnLeft,
  TurnRight,
  LookUp,
  LookDown,
  Jump,
  Sprint,
  Sneak,
  Stop,
};
inline constexpr int kNumMotionVerbs = 12;

std::string_view motion_surface(MotionVerb v);  // "Go forward", ...

enum class GroundingVerb : int {
  Mine = 0,
  Approach,
  Attack,
  Use,
  Craft,
  Place,
  Interact,
  Explore,
};
inline constexpr int kNumGroundingVerbs = 8;

std::string_view grounding_surface(GroundingVerb v);  // "Mine", ...

struct RawAction {
  TokenSequence tokens;
  bool operator==(const RawAction&) const = default;
};
struct TextAction {
  std::string text;  // full "Action: ..." string
  bool operator==(const TextAction&) const = default;
};
struct MotionAction {
  std::vector<MotionVerb> verbs;  // ordered, duplicate-free, non-empty
  bool operator==(const MotionAction&) const = default;
};
struct GroundingAction {
  GroundingVerb verb = GroundingVerb::Explore;
  std::string object;  // empty for Explore
  int col = -1;        // observation-frame coordinate; (-1,-1) = sentinel
  int row = -1;
  bool is_sentinel() const { return col < 0 && row < 0; }
  bool operator==(const GroundingAction&) const = default;
};
struct SkillAction {
  std::string text;  // drawn from the skill taxonomy
  bool operator==(const SkillAction&) const = default;
};
struct LatentAction {
  int code = 0;
  bool operator==(const LatentAction&) const = default;
};

using AbstractedAction = std::variant<RawAction, TextAction, MotionAction,
                                      GroundingAction, SkillAction, LatentAction>;

SpaceTag tag_of(const AbstractedAction& a);

struct UnknownVerbError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CoordinateOutOfFrameError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SpaceMismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Fixed skill vocabulary shared by the labeler and the skill policy head.
const std::vector<std::string>& skill_taxonomy();
bool is_known_skill(std::string_view s);

struct CodecConfig {
  // Frame bounds for grounding coordinates. Defaults cover a 640x360 frame;
  // the MineGrid pipeline narrows them to the egocentric window.
  int frame_cols = 640;
  int frame_rows = 360;
  int codebook_size = 64;  // bound for latent codes
};

std::string serialize_abstracted(const AbstractedAction& a);
AbstractedAction parse_abstracted(std::string_view s,
                                  const CodecConfig& cfg = {},
                                  std::optional<SpaceTag> expected = {});

}  // namespace openha::codecs
