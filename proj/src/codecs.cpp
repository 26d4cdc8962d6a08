#include "openha/codecs.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>

namespace openha::codecs {

namespace {

// fb in {0:none, 1:forward, 2:back}, lr in {0:none, 1:left, 2:right}
int movement_index(int fb, int lr) { return fb * 3 + lr; }

std::string format_delta(double v) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  std::string s(buf.data(), ptr);
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
      s.find("inf") == std::string::npos && s.find("nan") == std::string::npos) {
    s += ".0";
  }
  return s;
}

}  // namespace

WrongGroupError::WrongGroupError(int pos)
    : std::runtime_error("token in wrong group at position " +
                         std::to_string(pos)),
      position(pos) {}

GrammarError::GrammarError(std::size_t pos, const std::string& exp)
    : std::runtime_error("grammar error at " + std::to_string(pos) +
                         ": expected " + exp),
      position(pos),
      expected(exp) {}

// ---------------------------------------------------------------------------
// Raw codec
// ---------------------------------------------------------------------------

TokenSequence encode_raw(const EnvAction& a, const RawCodecConfig& cfg) {
  static constexpr ButtonName kAllowed[] = {
      ButtonName::Forward, ButtonName::Back,   ButtonName::Left,
      ButtonName::Right,   ButtonName::Jump,   ButtonName::Attack,
      ButtonName::Use,
  };
  for (int i = 0; i < kNumButtons; ++i) {
    if (!a.buttons[i]) continue;
    const auto b = static_cast<ButtonName>(i);
    if (std::find(std::begin(kAllowed), std::end(kAllowed), b) ==
        std::end(kAllowed)) {
      throw NotRepresentableError(std::string("button not representable: ") +
                                  std::string(button_label(b)));
    }
  }
  if (a.pressed(ButtonName::Forward) && a.pressed(ButtonName::Back)) {
    throw NotRepresentableError("forward+back exceed the movement group");
  }
  if (a.pressed(ButtonName::Left) && a.pressed(ButtonName::Right)) {
    throw NotRepresentableError("left+right exceed the movement group");
  }
  const int interactions = a.pressed(ButtonName::Attack) +
                           a.pressed(ButtonName::Use) +
                           a.pressed(ButtonName::Jump);
  if (interactions > 1) {
    throw NotRepresentableError("multiple interaction buttons pressed");
  }

  const int fb = a.pressed(ButtonName::Forward) ? 1
                 : a.pressed(ButtonName::Back)  ? 2
                                                : 0;
  const int lr = a.pressed(ButtonName::Left)    ? 1
                 : a.pressed(ButtonName::Right) ? 2
                                                : 0;
  const auto [pitch_bin, yaw_bin] =
      quantize_camera(a.camera_pitch, a.camera_yaw, cfg.camera);
  const int inter = a.pressed(ButtonName::Attack) ? 1
                    : a.pressed(ButtonName::Use)  ? 2
                    : a.pressed(ButtonName::Jump) ? 3
                                                  : 0;
  return {TokenId{RawCodecConfig::kMovementBase + movement_index(fb, lr)},
          TokenId{RawCodecConfig::kPitchBase + pitch_bin},
          TokenId{RawCodecConfig::kYawBase + yaw_bin},
          TokenId{RawCodecConfig::kInteractionBase + inter}};
}

EnvAction decode_raw(const TokenSequence& tokens, const RawCodecConfig& cfg) {
  if (tokens.size() != 4) {
    throw BadLengthError("raw action needs exactly 4 tokens, got " +
                         std::to_string(tokens.size()));
  }
  for (const auto& t : tokens) {
    if (t.value < 0 || t.value >= RawCodecConfig::kVocabSize) {
      throw UnknownTokenError("token id out of vocabulary: " +
                              std::to_string(t.value));
    }
  }
  const int mov = tokens[0].value - RawCodecConfig::kMovementBase;
  if (mov < 0 || mov >= RawCodecConfig::kMovementSize) throw WrongGroupError(0);
  const int pitch = tokens[1].value - RawCodecConfig::kPitchBase;
  if (pitch < 0 || pitch >= RawCodecConfig::kPitchSize) throw WrongGroupError(1);
  const int yaw = tokens[2].value - RawCodecConfig::kYawBase;
  if (yaw < 0 || yaw >= RawCodecConfig::kYawSize) throw WrongGroupError(2);
  const int inter = tokens[3].value - RawCodecConfig::kInteractionBase;
  if (inter < 0 || inter >= RawCodecConfig::kInteractionSize)
    throw WrongGroupError(3);

  EnvAction a;
  const int fb = mov / 3;
  const int lr = mov % 3;
  if (fb == 1) a.set(ButtonName::Forward);
  if (fb == 2) a.set(ButtonName::Back);
  if (lr == 1) a.set(ButtonName::Left);
  if (lr == 2) a.set(ButtonName::Right);
  std::tie(a.camera_pitch, a.camera_yaw) =
      dequantize_camera(pitch, yaw, cfg.camera);
  if (inter == 1) a.set(ButtonName::Attack);
  if (inter == 2) a.set(ButtonName::Use);
  if (inter == 3) a.set(ButtonName::Jump);
  return a;
}

EnvAction representable_action(int index, const RawCodecConfig& cfg) {
  const int inter = index % 4;
  index /= 4;
  const int yaw = index % 11;
  index /= 11;
  const int pitch = index % 11;
  const int mov = index / 11;
  return decode_raw({TokenId{RawCodecConfig::kMovementBase + mov},
                     TokenId{RawCodecConfig::kPitchBase + pitch},
                     TokenId{RawCodecConfig::kYawBase + yaw},
                     TokenId{RawCodecConfig::kInteractionBase + inter}},
                    cfg);
}

std::string render_token(TokenId t) {
  return "<|reserved_token_" + std::to_string(t.value) + "|>";
}

std::string render_tokens(const TokenSequence& ts) {
  std::string out;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (i) out += ' ';
    out += render_token(ts[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text codec
// ---------------------------------------------------------------------------

namespace {

// Canonical emission order and the key-name map. Modifier keys come first so
// combos render as e.g. (keyboard.left.control, keyboard.w, keyboard.a).
constexpr std::pair<ButtonName, std::string_view> kKeyOrder[kNumButtons] = {
    {ButtonName::Esc, "keyboard.escape"},
    {ButtonName::Sprint, "keyboard.left.control"},
    {ButtonName::Sneak, "keyboard.left.shift"},
    {ButtonName::Forward, "keyboard.w"},
    {ButtonName::Left, "keyboard.a"},
    {ButtonName::Back, "keyboard.s"},
    {ButtonName::Right, "keyboard.d"},
    {ButtonName::Jump, "keyboard.space"},
    {ButtonName::Inventory, "keyboard.e"},
    {ButtonName::SwapHands, "keyboard.f"},
    {ButtonName::Hotbar1, "keyboard.1"},
    {ButtonName::Hotbar2, "keyboard.2"},
    {ButtonName::Hotbar3, "keyboard.3"},
    {ButtonName::Hotbar4, "keyboard.4"},
    {ButtonName::Hotbar5, "keyboard.5"},
    {ButtonName::Hotbar6, "keyboard.6"},
    {ButtonName::Hotbar7, "keyboard.7"},
    {ButtonName::Hotbar8, "keyboard.8"},
    {ButtonName::Hotbar9, "keyboard.9"},
    {ButtonName::Drop, "keyboard.drop"},
    {ButtonName::Attack, "mouse.left"},
    {ButtonName::Use, "mouse.right"},
    {ButtonName::PickItem, "mouse.middle"},
};

}  // namespace

std::string_view key_name(ButtonName b) {
  for (const auto& [btn, name] : kKeyOrder) {
    if (btn == b) return name;
  }
  return {};
}

std::optional<ButtonName> button_from_key_name(std::string_view name) {
  for (const auto& [btn, n] : kKeyOrder) {
    if (n == name) return btn;
  }
  return std::nullopt;
}

std::string serialize_text(const EnvAction& a) {
  std::vector<std::string_view> keys;
  for (const auto& [btn, name] : kKeyOrder) {
    if (a.pressed(btn)) keys.push_back(name);
  }
  const bool has_camera = a.camera_pitch != 0.0 || a.camera_yaw != 0.0;

  std::string out = "Action: ";
  if (!has_camera && keys.empty()) {
    return out + "noop()";
  }
  bool first = true;
  if (has_camera) {
    out += "move(dx='" + format_delta(a.camera_yaw) + "', dy='" +
           format_delta(a.camera_pitch) + "')";
    first = false;
  }
  if (!keys.empty()) {
    if (!first) out += " and ";
    out += "keyDown(keys=(";
    for (std::size_t i = 0; i < keys.size(); ++i) {
      if (i) out += ", ";
      out += keys[i];
    }
    out += "))";
  }
  return out;
}

namespace {

class TextParser {
 public:
  explicit TextParser(std::string_view s) : s_(s) {}

  EnvAction parse() {
    expect("Action: ");
    EnvAction a;
    if (peek_is("noop()")) {
      consume("noop()");
      end();
      return a;
    }
    bool seen_move = false;
    bool seen_keys = false;
    while (true) {
      if (peek_is("move(")) {
        if (seen_move) throw GrammarError(pos_, "at most one move clause");
        parse_move(a);
        seen_move = true;
      } else if (peek_is("keyDown(")) {
        if (seen_keys) throw GrammarError(pos_, "at most one keyDown clause");
        parse_key_down(a);
        seen_keys = true;
      } else {
        throw GrammarError(pos_, "move( or keyDown(");
      }
      if (pos_ == s_.size()) break;
      expect(" and ");
    }
    return a;
  }

 private:
  bool peek_is(std::string_view lit) const {
    return s_.substr(pos_, lit.size()) == lit;
  }
  void consume(std::string_view lit) { pos_ += lit.size(); }
  void expect(std::string_view lit) {
    if (!peek_is(lit)) throw GrammarError(pos_, std::string(lit));
    consume(lit);
  }
  void end() const {
    if (pos_ != s_.size()) throw GrammarError(pos_, "end of input");
  }

  double parse_number() {
    const std::size_t start = pos_;
    while (pos_ < s_.size() && s_[pos_] != '\'') ++pos_;
    const std::string_view raw = s_.substr(start, pos_ - start);
    double v = 0.0;
    auto [ptr, ec] =
        std::from_chars(raw.data(), raw.data() + raw.size(), v);
    if (ec != std::errc{} || ptr != raw.data() + raw.size() ||
        !std::isfinite(v)) {
      throw NonNumericDeltaError("bad camera delta: '" + std::string(raw) +
                                 "'");
    }
    return v;
  }

  void parse_move(EnvAction& a) {
    expect("move(dx='");
    a.camera_yaw = parse_number();
    expect("',");
    if (peek_is(" ")) consume(" ");
    expect("dy='");
    a.camera_pitch = parse_number();
    expect("')");
  }

  void parse_key_down(EnvAction& a) {
    expect("keyDown(keys=(");
    while (true) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && s_[pos_] != ',' && s_[pos_] != ')') ++pos_;
      if (pos_ == s_.size()) throw GrammarError(pos_, ", or )");
      const std::string_view name = s_.substr(start, pos_ - start);
      const auto btn = button_from_key_name(name);
      if (!btn) {
        throw UnknownKeyNameError("unknown key name: " + std::string(name));
      }
      a.set(*btn);
      if (s_[pos_] == ')') break;
      consume(",");
      if (peek_is(" ")) consume(" ");
    }
    expect("))");
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

EnvAction parse_text(std::string_view s) { return TextParser(s).parse(); }

// ---------------------------------------------------------------------------
// Abstracted actions
// ---------------------------------------------------------------------------

namespace {

constexpr std::string_view kSpaceNames[] = {"raw",       "text",  "motion",
                                            "grounding", "skill", "latent"};

constexpr std::string_view kMotionSurfaces[kNumMotionVerbs] = {
    "Go forward", "Go backward", "Strafe left", "Strafe right",
    "Turn left",  "Turn right",  "Look up",     "Look down",
    "Jump",       "Sprint",      "Sneak",       "Stop",
};

constexpr std::string_view kGroundingSurfaces[kNumGroundingVerbs] = {
    "Mine", "Approach", "Attack", "Use", "Craft", "Place", "Interact",
    "Explore",
};

}  // namespace

std::string_view space_name(SpaceTag t) {
  return kSpaceNames[static_cast<int>(t)];
}

std::optional<SpaceTag> space_from_name(std::string_view s) {
  for (int i = 0; i < 6; ++i) {
    if (kSpaceNames[i] == s) return static_cast<SpaceTag>(i);
  }
  return std::nullopt;
}

std::string_view motion_surface(MotionVerb v) {
  return kMotionSurfaces[static_cast<int>(v)];
}

std::string_view grounding_surface(GroundingVerb v) {
  return kGroundingSurfaces[static_cast<int>(v)];
}

SpaceTag tag_of(const AbstractedAction& a) {
  return static_cast<SpaceTag>(a.index());
}

const std::vector<std::string>& skill_taxonomy() {
  static const std::vector<std::string> kSkills = {
      "chop down trees",        "explore the world", "open the crafting table",
      "craft planks",           "craft sticks",      "kill the zombie",
      "kill the spider",        "kill the sheep",
  };
  return kSkills;
}

bool is_known_skill(std::string_view s) {
  const auto& tax = skill_taxonomy();
  return std::find(tax.begin(), tax.end(), s) != tax.end();
}

std::string serialize_abstracted(const AbstractedAction& a) {
  struct Visitor {
    std::string operator()(const RawAction& r) const {
      return render_tokens(r.tokens);
    }
    std::string operator()(const TextAction& t) const { return t.text; }
    std::string operator()(const MotionAction& m) const {
      std::string out = "Action: ";
      for (std::size_t i = 0; i < m.verbs.size(); ++i) {
        if (i) out += ", ";
        out += motion_surface(m.verbs[i]);
      }
      out += ".";
      return out;
    }
    std::string operator()(const GroundingAction& g) const {
      if (g.verb == GroundingVerb::Explore) return "Action: Explore()";
      return "Action: " + std::string(grounding_surface(g.verb)) +
             "(object='" + g.object + "', position=[" + std::to_string(g.col) +
             ", " + std::to_string(g.row) + "])";
    }
    std::string operator()(const SkillAction& s) const {
      return "Action: " + s.text;
    }
    std::string operator()(const LatentAction& l) const {
      return render_token(TokenId{l.code});
    }
  };
  return std::visit(Visitor{}, a);
}

namespace {

// Parses one "<|reserved_token_K|>" marker at pos; advances pos.
TokenId parse_marker(std::string_view s, std::size_t& pos) {
  constexpr std::string_view kPrefix = "<|reserved_token_";
  if (s.substr(pos, kPrefix.size()) != kPrefix) {
    throw GrammarError(pos, std::string(kPrefix));
  }
  pos += kPrefix.size();
  const std::size_t start = pos;
  while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
  if (pos == start) throw GrammarError(pos, "token number");
  int value = 0;
  std::from_chars(s.data() + start, s.data() + pos, value);
  if (s.substr(pos, 2) != "|>") throw GrammarError(pos, "|>");
  pos += 2;
  return TokenId{value};
}

AbstractedAction parse_markers(std::string_view s, const CodecConfig& cfg) {
  std::size_t pos = 0;
  TokenSequence tokens;
  tokens.push_back(parse_marker(s, pos));
  while (pos < s.size()) {
    if (s[pos] != ' ') throw GrammarError(pos, "space between tokens");
    ++pos;
    tokens.push_back(parse_marker(s, pos));
  }
  if (tokens.size() == 1) {
    const int code = tokens[0].value;
    if (code < 0 || code >= cfg.codebook_size) {
      throw UnknownTokenError("latent code out of range: " +
                              std::to_string(code));
    }
    return LatentAction{code};
  }
  if (tokens.size() == 4) {
    for (const auto& t : tokens) {
      if (t.value < 0 || t.value >= RawCodecConfig::kVocabSize) {
        throw UnknownTokenError("token id out of vocabulary: " +
                                std::to_string(t.value));
      }
    }
    return RawAction{tokens};
  }
  throw BadLengthError("expected 1 (latent) or 4 (raw) tokens, got " +
                       std::to_string(tokens.size()));
}

std::optional<GroundingVerb> grounding_verb_from(std::string_view s) {
  for (int i = 0; i < kNumGroundingVerbs; ++i) {
    if (kGroundingSurfaces[i] == s) return static_cast<GroundingVerb>(i);
  }
  return std::nullopt;
}

std::optional<MotionVerb> motion_verb_from(std::string_view s) {
  for (int i = 0; i < kNumMotionVerbs; ++i) {
    if (kMotionSurfaces[i] == s) return static_cast<MotionVerb>(i);
  }
  return std::nullopt;
}

int parse_coordinate(std::string_view s, std::size_t& pos) {
  const std::size_t start = pos;
  if (pos < s.size() && s[pos] == '-') ++pos;
  while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
  if (pos == start) throw GrammarError(pos, "integer coordinate");
  int v = 0;
  std::from_chars(s.data() + start, s.data() + pos, v);
  return v;
}

GroundingAction parse_grounding(std::string_view rest, const CodecConfig& cfg) {
  const std::size_t open = rest.find('(');
  const std::string_view verb_str = rest.substr(0, open);
  const auto verb = grounding_verb_from(verb_str);
  if (!verb) {
    throw UnknownVerbError("unknown grounding verb: " + std::string(verb_str));
  }
  if (*verb == GroundingVerb::Explore) {
    if (rest.substr(open) != "()") {
      throw GrammarError(open, "Explore takes no arguments");
    }
    return GroundingAction{GroundingVerb::Explore, "", -1, -1};
  }
  std::size_t pos = open;
  auto expect = [&](std::string_view lit) {
    if (rest.substr(pos, lit.size()) != lit) {
      throw GrammarError(pos, std::string(lit));
    }
    pos += lit.size();
  };
  expect("(object='");
  const std::size_t obj_start = pos;
  while (pos < rest.size() && rest[pos] != '\'') ++pos;
  GroundingAction g;
  g.verb = *verb;
  g.object = std::string(rest.substr(obj_start, pos - obj_start));
  expect("',");
  if (pos < rest.size() && rest[pos] == ' ') ++pos;
  expect("position=[");
  g.col = parse_coordinate(rest, pos);
  expect(",");
  if (pos < rest.size() && rest[pos] == ' ') ++pos;
  g.row = parse_coordinate(rest, pos);
  expect("])");
  if (pos != rest.size()) throw GrammarError(pos, "end of input");
  if (g.col < 0 || g.col >= cfg.frame_cols || g.row < 0 ||
      g.row >= cfg.frame_rows) {
    throw CoordinateOutOfFrameError(
        "coordinate [" + std::to_string(g.col) + ", " + std::to_string(g.row) +
        "] outside frame " + std::to_string(cfg.frame_cols) + "x" +
        std::to_string(cfg.frame_rows));
  }
  return g;
}

MotionAction parse_motion(std::string_view rest) {
  if (rest.empty() || rest.back() != '.') {
    throw GrammarError(rest.size(), "trailing period");
  }
  rest.remove_suffix(1);
  MotionAction m;
  std::size_t pos = 0;
  while (true) {
    std::size_t comma = rest.find(", ", pos);
    const std::string_view part =
        rest.substr(pos, comma == std::string_view::npos ? std::string_view::npos
                                                         : comma - pos);
    const auto verb = motion_verb_from(part);
    if (!verb) {
      throw UnknownVerbError("unknown motion verb: " + std::string(part));
    }
    if (std::find(m.verbs.begin(), m.verbs.end(), *verb) != m.verbs.end()) {
      throw GrammarError(pos, "duplicate motion verb");
    }
    m.verbs.push_back(*verb);
    if (comma == std::string_view::npos) break;
    pos = comma + 2;
  }
  return m;
}

}  // namespace

AbstractedAction parse_abstracted(std::string_view s, const CodecConfig& cfg,
                                  std::optional<SpaceTag> expected) {
  AbstractedAction out = [&]() -> AbstractedAction {
    if (s.substr(0, 2) == "<|") return parse_markers(s, cfg);
    constexpr std::string_view kPrefix = "Action: ";
    if (s.substr(0, kPrefix.size()) != kPrefix) {
      throw GrammarError(0, std::string(kPrefix) + " or token marker");
    }
    const std::string_view rest = s.substr(kPrefix.size());
    if (rest == "noop()" || rest.substr(0, 5) == "move(" ||
        rest.substr(0, 8) == "keyDown(") {
      parse_text(s);  // validates
      return TextAction{std::string(s)};
    }
    if (is_known_skill(rest)) return SkillAction{std::string(rest)};
    if (rest.find('(') != std::string_view::npos) {
      return parse_grounding(rest, cfg);
    }
    return parse_motion(rest);
  }();
  if (expected && tag_of(out) != *expected) {
    throw SpaceMismatchError(std::string("expected ") +
                             std::string(space_name(*expected)) + ", parsed " +
                             std::string(space_name(tag_of(out))));
  }
  return out;
}

}  // namespace openha::codecs
