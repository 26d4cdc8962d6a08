#include "openha/codecs.hpp"

#include <string>

#include "doctest.h"
#include "openha/rng.hpp"

using namespace openha;
using namespace openha::codecs;

TEST_CASE("raw codec encodes the null action to the none/center tokens") {
  const auto toks = encode_raw(null_action());
  REQUIRE(toks.size() == 4);
  CHECK(toks[0].value == 0);        // movement none
  CHECK(toks[1].value == 9 + 5);    // pitch center bin
  CHECK(toks[2].value == 20 + 5);   // yaw center bin
  CHECK(toks[3].value == 31);       // interaction none
}

TEST_CASE("raw codec forward + table camera example, layout-table oracle") {
  EnvAction a;
  a.set(ButtonName::Forward);
  a.camera_pitch = -1.0;
  a.camera_yaw = -9.0;
  const CameraBinConfig cam;
  const auto toks = encode_raw(a);
  // Layout oracle: movement fb=forward(1), lr=none(0) -> 3; pitch/yaw bins
  // from the quantizer checked against its own oracle in test_action.
  CHECK(toks[0].value == 3);
  CHECK(toks[1].value == 9 + quantize_camera_axis(-1.0, cam));
  CHECK(toks[2].value == 20 + quantize_camera_axis(-9.0, cam));
  CHECK(toks[3].value == 31);
  // Rendered form: four markers.
  const std::string rendered = render_tokens(toks);
  CHECK(rendered.find("<|reserved_token_3|>") == 0);
  int markers = 0;
  for (std::size_t p = rendered.find("<|"); p != std::string::npos;
       p = rendered.find("<|", p + 1)) {
    ++markers;
  }
  CHECK(markers == 4);
}

TEST_CASE("raw codec round-trips the full representable set") {
  for (int i = 0; i < kRepresentableActionCount; ++i) {
    const EnvAction a = representable_action(i);
    CHECK(decode_raw(encode_raw(a)) == a);
  }
}

TEST_CASE("raw codec errors") {
  EnvAction sneak;
  sneak.set(ButtonName::Sneak);
  CHECK_THROWS_AS(encode_raw(sneak), NotRepresentableError);

  CHECK_THROWS_AS(decode_raw({TokenId{0}, TokenId{14}, TokenId{25}}),
                  BadLengthError);
  CHECK_THROWS_AS(
      decode_raw({TokenId{31}, TokenId{14}, TokenId{25}, TokenId{31}}),
      WrongGroupError);
  try {
    decode_raw({TokenId{31}, TokenId{14}, TokenId{25}, TokenId{31}});
  } catch (const WrongGroupError& e) {
    CHECK(e.position == 0);
  }
  CHECK_THROWS_AS(
      decode_raw({TokenId{0}, TokenId{14}, TokenId{25}, TokenId{99}}),
      UnknownTokenError);
}

TEST_CASE("serialize_text canonical forms") {
  CHECK(serialize_text(null_action()) == "Action: noop()");

  EnvAction combo;
  combo.set(ButtonName::Sprint);
  combo.set(ButtonName::Forward);
  combo.set(ButtonName::Left);
  CHECK(serialize_text(combo) ==
        "Action: keyDown(keys=(keyboard.left.control, keyboard.w, "
        "keyboard.a))");

  EnvAction moving;
  moving.set(ButtonName::Sprint);
  moving.set(ButtonName::Forward);
  moving.camera_pitch = -1.0;
  moving.camera_yaw = 4.0;
  CHECK(serialize_text(moving) ==
        "Action: move(dx='4.0', dy='-1.0') and "
        "keyDown(keys=(keyboard.left.control, keyboard.w))");
}

TEST_CASE("both table text examples parse and re-serialize byte-identically") {
  const std::string ex1 =
      "Action: keyDown(keys=(keyboard.left.control, keyboard.w, keyboard.a))";
  const std::string ex2 =
      "Action: move(dx='4.0', dy='-1.0') and "
      "keyDown(keys=(keyboard.left.control, keyboard.w))";
  for (const auto& s : {ex1, ex2}) {
    const EnvAction a = parse_text(s);
    CHECK(serialize_text(a) == s);
  }
  const EnvAction a2 = parse_text(ex2);
  CHECK(a2.pressed(ButtonName::Sprint));
  CHECK(a2.pressed(ButtonName::Forward));
  CHECK(a2.camera_yaw == 4.0);
  CHECK(a2.camera_pitch == -1.0);
}

TEST_CASE("text codec round-trips random actions exactly") {
  Rng rng(99);
  for (int i = 0; i < 2000; ++i) {
    EnvAction a;
    for (int b = 0; b < kNumButtons; ++b) {
      a.buttons[b] = rng.next_below(4) == 0 ? 1 : 0;
    }
    if (rng.next_below(2)) {
      a.camera_pitch = rng.next_double(-180.0, 180.0);
      a.camera_yaw = rng.next_double(-180.0, 180.0);
    }
    CHECK(parse_text(serialize_text(a)) == a);
  }
}

TEST_CASE("text codec errors") {
  CHECK_THROWS_AS(parse_text("Action: keyDown(keys=(keyboard.q))"),
                  UnknownKeyNameError);
  CHECK_THROWS_AS(parse_text("Action: fly()"), GrammarError);
  CHECK_THROWS_AS(parse_text("keyDown(keys=(keyboard.w))"), GrammarError);
  CHECK_THROWS_AS(parse_text("Action: move(dx='abc', dy='0.0')"),
                  NonNumericDeltaError);
}

TEST_CASE("serialize_abstracted table examples") {
  CHECK(serialize_abstracted(
            MotionAction{{MotionVerb::GoForward, MotionVerb::TurnLeft}}) ==
        "Action: Go forward, Turn left.");
  CHECK(serialize_abstracted(
            GroundingAction{GroundingVerb::Mine, "oak_log", 100, 200}) ==
        "Action: Mine(object='oak_log', position=[100, 200])");
  CHECK(serialize_abstracted(LatentAction{2}) == "<|reserved_token_2|>");
}

TEST_CASE("parse_abstracted table examples into intended variants") {
  const CodecConfig cfg;
  const auto g = parse_abstracted(
      "Action: Approach(object='sheep', position=[200, 300])", cfg);
  REQUIRE(tag_of(g) == SpaceTag::Grounding);
  const auto& ga = std::get<GroundingAction>(g);
  CHECK(ga.verb == GroundingVerb::Approach);
  CHECK(ga.object == "sheep");
  CHECK(ga.col == 200);
  CHECK(ga.row == 300);

  const auto m = parse_abstracted("Action: Go forward, Turn left.", cfg);
  CHECK(tag_of(m) == SpaceTag::Motion);

  const auto l = parse_abstracted("<|reserved_token_2|>", cfg);
  REQUIRE(tag_of(l) == SpaceTag::Latent);
  CHECK(std::get<LatentAction>(l).code == 2);

  const auto r = parse_abstracted(
      "<|reserved_token_1|> <|reserved_token_7|> <|reserved_token_9|> "
      "<|reserved_token_2|>",
      cfg);
  CHECK(tag_of(r) == SpaceTag::Raw);
}

TEST_CASE("parse_abstracted errors") {
  const CodecConfig cfg;
  CHECK_THROWS_AS(
      parse_abstracted("Action: Fly(object='x', position=[0, 0])", cfg),
      UnknownVerbError);
  CHECK_THROWS_AS(
      parse_abstracted("Action: Mine(object='x', position=[1000, 0])", cfg),
      CoordinateOutOfFrameError);
  CHECK_THROWS_AS(parse_abstracted("Action: Go forward.", cfg, SpaceTag::Skill),
                  SpaceMismatchError);
  CHECK_THROWS_AS(parse_abstracted("Action: Dance wildly.", cfg),
                  UnknownVerbError);
  CHECK_THROWS_AS(parse_abstracted("Action: dance wildly", cfg), GrammarError);
}

namespace {

AbstractedAction random_abstracted(SpaceTag space, Rng& rng,
                                   const CodecConfig& cfg) {
  switch (space) {
    case SpaceTag::Raw: {
      const int idx =
          static_cast<int>(rng.next_below(kRepresentableActionCount));
      return RawAction{encode_raw(representable_action(idx))};
    }
    case SpaceTag::Text: {
      EnvAction a;
      for (int b = 0; b < kNumButtons; ++b) {
        a.buttons[b] = rng.next_below(5) == 0 ? 1 : 0;
      }
      if (rng.next_below(2)) a.camera_yaw = rng.next_double(-180, 180);
      return TextAction{serialize_text(a)};
    }
    case SpaceTag::Motion: {
      MotionAction m;
      for (int v = 0; v < kNumMotionVerbs; ++v) {
        if (rng.next_below(4) == 0) m.verbs.push_back(static_cast<MotionVerb>(v));
      }
      if (m.verbs.empty()) m.verbs.push_back(MotionVerb::Stop);
      return m;
    }
    case SpaceTag::Grounding: {
      const auto verb =
          static_cast<GroundingVerb>(rng.next_below(kNumGroundingVerbs));
      if (verb == GroundingVerb::Explore) {
        return GroundingAction{GroundingVerb::Explore, "", -1, -1};
      }
      static const char* kObjects[] = {"oak_log", "sheep", "zombie", "rock"};
      return GroundingAction{
          verb, kObjects[rng.next_below(4)],
          static_cast<int>(rng.next_below(cfg.frame_cols)),
          static_cast<int>(rng.next_below(cfg.frame_rows))};
    }
    case SpaceTag::Skill: {
      const auto& tax = skill_taxonomy();
      return SkillAction{tax[rng.next_below(tax.size())]};
    }
    case SpaceTag::Latent:
      return LatentAction{static_cast<int>(rng.next_below(cfg.codebook_size))};
  }
  return LatentAction{0};
}

}  // namespace

TEST_CASE("serialize/parse round-trip on generated strings per space") {
  const CodecConfig cfg;
  Rng rng(2024);
  for (SpaceTag space : {SpaceTag::Raw, SpaceTag::Text, SpaceTag::Motion,
                         SpaceTag::Grounding, SpaceTag::Skill, SpaceTag::Latent}) {
    for (int i = 0; i < 1000; ++i) {
      const AbstractedAction a = random_abstracted(space, rng, cfg);
      const std::string s = serialize_abstracted(a);
      const AbstractedAction back = parse_abstracted(s, cfg, space);
      CHECK(back == a);
      CHECK(serialize_abstracted(back) == s);
    }
  }
}
