#include "openha/labeler.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "openha/rng.hpp"

namespace openha::labeler {

using codecs::AbstractedAction;
using codecs::GroundingAction;
using codecs::GroundingVerb;
using codecs::MotionAction;
using codecs::MotionVerb;
using codecs::SkillAction;
using minegrid::Event;
using minegrid::EventKind;
using minegrid::Observation;
using minegrid::VisibleEntity;
using json = nlohmann::ordered_json;

namespace {

void check_config(const LabelerConfig& cfg) {
  if (cfg.window_k < 1) throw BadConfigError("window_k must be >= 1");
  if (cfg.turn_threshold_deg <= 0.0 || cfg.look_threshold_deg <= 0.0) {
    throw BadConfigError("camera thresholds must be positive");
  }
  if (cfg.press_fraction <= 0.0 || cfg.press_fraction > 1.0) {
    throw BadConfigError("press_fraction must lie in (0, 1]");
  }
}

void check_traj(const Trajectory& traj) {
  if (traj.steps.empty()) throw BadConfigError("trajectory must be non-empty");
  for (std::size_t i = 0; i < traj.steps.size(); ++i) {
    if (traj.steps[i].t != static_cast<int>(i)) {
      throw BadConfigError("step indices must run 0..T-1");
    }
  }
}

int held_count(const Trajectory& traj, int b, int e, ButtonName btn) {
  int n = 0;
  for (int t = b; t < e; ++t) {
    if (traj.steps[t].a.pressed(btn)) ++n;
  }
  return n;
}

}  // namespace

std::vector<WindowLabel> label_motion(const Trajectory& traj,
                                      const LabelerConfig& cfg) {
  check_config(cfg);
  check_traj(traj);
  const int T = static_cast<int>(traj.steps.size());
  std::vector<WindowLabel> out;
  for (int b = 0; b < T; b += cfg.window_k) {
    const int e = std::min(b + cfg.window_k, T);
    const double need = cfg.press_fraction * (e - b);
    auto qualifies = [&](ButtonName btn) {
      return held_count(traj, b, e, btn) >= need - 1e-9;
    };
    double yaw = 0.0, pitch = 0.0;
    for (int t = b; t < e; ++t) {
      yaw += traj.steps[t].a.camera_yaw;
      pitch += traj.steps[t].a.camera_pitch;
    }

    MotionAction m;
    // Opposing movement pairs: the more-held side wins, a tie drops both.
    const int cf = held_count(traj, b, e, ButtonName::Forward);
    const int cb = held_count(traj, b, e, ButtonName::Back);
    const int cl = held_count(traj, b, e, ButtonName::Left);
    const int cr = held_count(traj, b, e, ButtonName::Right);
    const bool fq = qualifies(ButtonName::Forward);
    const bool bq = qualifies(ButtonName::Back);
    const bool lq = qualifies(ButtonName::Left);
    const bool rq = qualifies(ButtonName::Right);
    if (fq && (!bq || cf > cb)) m.verbs.push_back(MotionVerb::GoForward);
    if (bq && (!fq || cb > cf)) m.verbs.push_back(MotionVerb::GoBackward);
    if (lq && (!rq || cl > cr)) m.verbs.push_back(MotionVerb::StrafeLeft);
    if (rq && (!lq || cr > cl)) m.verbs.push_back(MotionVerb::StrafeRight);
    if (yaw <= -cfg.turn_threshold_deg) m.verbs.push_back(MotionVerb::TurnLeft);
    if (yaw >= cfg.turn_threshold_deg) m.verbs.push_back(MotionVerb::TurnRight);
    if (pitch <= -cfg.look_threshold_deg) m.verbs.push_back(MotionVerb::LookUp);
    if (pitch >= cfg.look_threshold_deg) m.verbs.push_back(MotionVerb::LookDown);
    if (qualifies(ButtonName::Jump)) m.verbs.push_back(MotionVerb::Jump);
    if (qualifies(ButtonName::Sprint)) m.verbs.push_back(MotionVerb::Sprint);
    if (qualifies(ButtonName::Sneak)) m.verbs.push_back(MotionVerb::Sneak);
    if (m.verbs.empty()) m.verbs.push_back(MotionVerb::Stop);
    out.push_back(WindowLabel{b, e, AbstractedAction{std::move(m)}});
  }
  return out;
}

namespace {

// Nearest entity to the view center; ties resolve to list order.
const VisibleEntity* nearest_to_center(const std::vector<VisibleEntity>& vis) {
  const int c = minegrid::kViewSize / 2;
  const VisibleEntity* best = nullptr;
  int best_d = 1 << 20;
  for (const auto& v : vis) {
    const int d = std::max(std::abs(v.col - c), std::abs(v.row - c));
    if (d < best_d) {
      best_d = d;
      best = &v;
    }
  }
  return best;
}

const VisibleEntity* nearest_named(const std::vector<VisibleEntity>& vis,
                                   const std::string& name, int col, int row) {
  const VisibleEntity* best = nullptr;
  int best_d = 1 << 20;
  for (const auto& v : vis) {
    if (v.name != name) continue;
    const int d = std::max(std::abs(v.col - col), std::abs(v.row - row));
    if (d < best_d) {
      best_d = d;
      best = &v;
    }
  }
  return best;
}

bool has_event(const std::vector<Event>& events, EventKind k,
               std::string* detail = nullptr) {
  for (const auto& ev : events) {
    if (ev.kind == k) {
      if (detail) *detail = ev.detail;
      return true;
    }
  }
  return false;
}

}  // namespace

std::vector<WindowLabel> label_grounding(const Trajectory& traj,
                                         const GroundTruth& ground_truth,
                                         const LabelerConfig& cfg) {
  check_config(cfg);
  check_traj(traj);
  if (ground_truth.size() != traj.steps.size()) {
    throw GroundTruthMissing("visible-entity lists must cover every step");
  }
  const int T = static_cast<int>(traj.steps.size());
  const int center = minegrid::kViewSize / 2;
  std::vector<WindowLabel> out;
  for (int b = 0; b < T; b += cfg.window_k) {
    const int e = std::min(b + cfg.window_k, T);
    std::optional<GroundingAction> label;

    // GUI clicks first: the window is named after its most significant click
    // outcome (craft > place > anything else).
    int best_rank = 0;
    for (int t = b; t < e; ++t) {
      const auto& st = traj.steps[t];
      if (!st.obs.gui_mode) continue;
      if (!st.a.pressed(ButtonName::Attack) &&
          !st.a.pressed(ButtonName::PickItem)) {
        continue;
      }
      GroundingAction g;
      g.col = st.obs.cursor_col;
      g.row = st.obs.cursor_row;
      int rank = 1;
      std::string detail;
      if (has_event(st.events, EventKind::Crafted, &detail)) {
        g.verb = GroundingVerb::Craft;
        g.object = detail;
        rank = 3;
      } else if (has_event(st.events, EventKind::ItemPlaced, &detail)) {
        g.verb = GroundingVerb::Place;
        g.object = detail;
        rank = 2;
      } else {
        g.verb = GroundingVerb::Interact;
        g.object = has_event(st.events, EventKind::ItemPicked, &detail)
                       ? detail
                       : "crafting_table";
      }
      if (rank > best_rank) {
        best_rank = rank;
        label = g;
      }
    }

    // World interactions: attack or use while facing a visible entity.
    for (int t = b; t < e && !label; ++t) {
      const auto& st = traj.steps[t];
      if (st.obs.gui_mode) continue;
      const bool attack = st.a.pressed(ButtonName::Attack);
      const bool use = st.a.pressed(ButtonName::Use);
      if (!attack && !use) continue;
      const auto [dc, dr] = minegrid::heading_delta(st.obs.heading);
      const int fc = center + dc;
      const int fr = center + dr;
      const VisibleEntity* faced = nullptr;
      for (const auto& v : ground_truth[t]) {
        if (v.col == fc && v.row == fr) {
          faced = &v;
          break;
        }
      }
      if (!faced) continue;
      GroundingAction g;
      g.verb = use ? GroundingVerb::Use
                   : (faced->is_block ? GroundingVerb::Mine
                                      : GroundingVerb::Attack);
      g.object = faced->name;
      // Coordinate at window start; fall back to the interaction frame if the
      // entity was not yet visible there.
      const VisibleEntity* at_start =
          nearest_named(ground_truth[b], faced->name, faced->col, faced->row);
      g.col = at_start ? at_start->col : faced->col;
      g.row = at_start ? at_start->row : faced->row;
      label = g;
    }

    // Approach: net displacement toward the nearest start-of-window entity.
    if (!label) {
      if (const VisibleEntity* target = nearest_to_center(ground_truth[b])) {
        const int d0 = std::max(std::abs(target->col - center),
                                std::abs(target->row - center));
        const VisibleEntity* at_end = nearest_named(
            ground_truth[e - 1], target->name, center, center);
        if (at_end) {
          const int d1 = std::max(std::abs(at_end->col - center),
                                  std::abs(at_end->row - center));
          if (d0 - d1 > 1) {
            GroundingAction g;
            g.verb = GroundingVerb::Approach;
            g.object = target->name;
            g.col = target->col;
            g.row = target->row;
            label = g;
          }
        }
      }
    }

    if (!label) label = GroundingAction{};  // Explore, sentinel coordinate
    out.push_back(WindowLabel{b, e, AbstractedAction{*label}});
  }
  return out;
}

namespace {

// Template table keyed by achievement event; names come from the shared
// skill taxonomy.
std::optional<std::string> skill_for_event(const Event& ev) {
  switch (ev.kind) {
    case EventKind::LogGained:
      return "chop down trees";
    case EventKind::MobKilled:
      return "kill the " + ev.detail;
    case EventKind::Crafted:
      return ev.detail == "stick" ? "craft sticks" : "craft planks";
    case EventKind::GuiOpened:
      return "open the crafting table";
    default:
      return std::nullopt;
  }
}

}  // namespace

std::vector<WindowLabel> label_skill(const Trajectory& traj,
                                     const LabelerConfig& cfg) {
  check_config(cfg);
  check_traj(traj);
  const int T = static_cast<int>(traj.steps.size());
  std::vector<WindowLabel> out;
  int begin = 0;
  for (int t = 0; t < T; ++t) {
    for (const auto& ev : traj.steps[t].events) {
      if (auto name = skill_for_event(ev)) {
        out.push_back(WindowLabel{begin, t + 1,
                                  AbstractedAction{SkillAction{*name}}});
        begin = t + 1;
        break;
      }
    }
  }
  if (begin < T) {
    out.push_back(WindowLabel{
        begin, T, AbstractedAction{SkillAction{"explore the world"}}});
  }
  return out;
}

std::string_view dataset_kind_name(DatasetKind k) {
  switch (k) {
    case DatasetKind::DA:
      return "D_A";
    case DatasetKind::Da:
      return "D_a";
    case DatasetKind::DCoA:
      return "D_CoA";
  }
  return "?";
}

Dataset build_dataset(
    const std::vector<Trajectory>& trajs,
    const std::map<std::string, std::vector<WindowLabel>>& labels,
    DatasetKind kind, codecs::SpaceTag space) {
  std::vector<const Trajectory*> order;
  order.reserve(trajs.size());
  for (const auto& t : trajs) order.push_back(&t);
  std::sort(order.begin(), order.end(),
            [](const Trajectory* a, const Trajectory* b) {
              return a->id < b->id;
            });

  Dataset out;
  out.kind = kind;
  const bool need_labels = kind != DatasetKind::Da;
  for (const Trajectory* traj : order) {
    check_traj(*traj);
    const int T = static_cast<int>(traj->steps.size());
    const std::vector<WindowLabel>* wl = nullptr;
    if (need_labels) {
      auto it = labels.find(traj->id);
      if (it == labels.end()) {
        throw CoverageGap("no labels for trajectory " + traj->id);
      }
      wl = &it->second;
      // Windows must tile [0, T) in order.
      int expect = 0;
      for (const auto& w : *wl) {
        if (w.begin != expect || w.end <= w.begin) {
          throw CoverageGap("labels do not tile trajectory " + traj->id);
        }
        expect = w.end;
      }
      if (expect != T) {
        throw CoverageGap("labels do not tile trajectory " + traj->id);
      }
    }
    std::size_t wi = 0;
    for (int t = 0; t < T; ++t) {
      DatasetRecord rec;
      rec.traj = traj->id;
      rec.t = t;
      rec.instruction = traj->instruction;
      rec.obs = traj->steps[t].obs;
      rec.space = space;
      if (need_labels) {
        while ((*wl)[wi].end <= t) ++wi;
        rec.A = (*wl)[wi].action;
      }
      if (kind != DatasetKind::DA) rec.a = traj->steps[t].a;
      out.records.push_back(std::move(rec));
    }
  }
  return out;
}

Dataset merge_shuffled(const std::vector<Dataset>& parts, std::uint64_t seed) {
  Dataset out;
  if (parts.empty()) return out;
  out.kind = parts.front().kind;
  for (const auto& p : parts) {
    if (p.kind != out.kind) {
      throw BadConfigError("cannot merge datasets of different kinds");
    }
    out.records.insert(out.records.end(), p.records.begin(), p.records.end());
  }
  Rng rng(seed);
  for (std::size_t i = out.records.size(); i > 1; --i) {
    std::swap(out.records[i - 1], out.records[rng.next_below(i)]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON I/O
// ---------------------------------------------------------------------------

namespace {

json obs_json(const Observation& o) {
  json j;
  j["view_size"] = o.view_size;
  json view = json::array();
  for (const auto& c : o.view) view.push_back({c.terrain, c.entity});
  j["view"] = std::move(view);
  j["health"] = o.health;
  j["heading"] = o.heading;
  j["pitch"] = o.pitch;
  j["selected"] = o.selected_item;
  j["gui_mode"] = o.gui_mode;
  json gui = json::array();
  for (const auto& s : o.gui) {
    gui.push_back({static_cast<int>(s.item), s.count});
  }
  j["gui"] = std::move(gui);
  j["cursor"] = {o.cursor_col, o.cursor_row};
  return j;
}

Observation obs_from(const json& j) {
  Observation o;
  o.view_size = j.at("view_size").get<int>();
  o.view.clear();
  for (const auto& c : j.at("view")) {
    o.view.push_back(minegrid::ObsCell{c.at(0).get<int>(), c.at(1).get<int>()});
  }
  o.health = j.at("health").get<int>();
  o.heading = j.at("heading").get<int>();
  o.pitch = j.at("pitch").get<int>();
  o.selected_item = j.at("selected").get<std::string>();
  o.gui_mode = j.at("gui_mode").get<bool>();
  o.gui.clear();
  for (const auto& s : j.at("gui")) {
    o.gui.push_back(minegrid::GuiSlot{
        static_cast<minegrid::Item>(s.at(0).get<int>()), s.at(1).get<int>()});
  }
  o.cursor_col = j.at("cursor").at(0).get<int>();
  o.cursor_row = j.at("cursor").at(1).get<int>();
  return o;
}

constexpr std::string_view kEventNames[] = {
    "log_gained", "mob_killed",  "crafted",    "gui_opened",   "gui_closed",
    "item_picked", "item_placed", "agent_hurt", "goal_reached", "illegal_input"};

std::string_view event_name(EventKind k) {
  return kEventNames[static_cast<int>(k)];
}

EventKind event_from_name(const std::string& s) {
  for (int i = 0; i < static_cast<int>(std::size(kEventNames)); ++i) {
    if (kEventNames[i] == s) return static_cast<EventKind>(i);
  }
  throw BadConfigError("unknown event name: " + s);
}

}  // namespace

std::string obs_to_json(const Observation& obs) { return obs_json(obs).dump(); }

Observation obs_from_json(const std::string& s) {
  return obs_from(json::parse(s));
}

std::string bundle_to_json(const TrajectoryBundle& b) {
  json j;
  j["id"] = b.traj.id;
  j["ins"] = b.traj.instruction;
  json steps = json::array();
  for (std::size_t i = 0; i < b.traj.steps.size(); ++i) {
    const auto& st = b.traj.steps[i];
    json js;
    js["t"] = st.t;
    js["obs"] = obs_json(st.obs);
    js["a"] = codecs::serialize_text(st.a);
    json evs = json::array();
    for (const auto& ev : st.events) {
      evs.push_back({std::string(event_name(ev.kind)), ev.detail});
    }
    js["events"] = std::move(evs);
    json vis = json::array();
    if (i < b.visible.size()) {
      for (const auto& v : b.visible[i]) {
        vis.push_back({v.name, v.is_block, v.col, v.row});
      }
    }
    js["vis"] = std::move(vis);
    steps.push_back(std::move(js));
  }
  j["steps"] = std::move(steps);
  return j.dump();
}

TrajectoryBundle bundle_from_json(const std::string& s) {
  const json j = json::parse(s);
  TrajectoryBundle b;
  b.traj.id = j.at("id").get<std::string>();
  b.traj.instruction = j.at("ins").get<std::string>();
  for (const auto& js : j.at("steps")) {
    TrajStep st;
    st.t = js.at("t").get<int>();
    st.obs = obs_from(js.at("obs"));
    st.a = codecs::parse_text(js.at("a").get<std::string>());
    for (const auto& ev : js.at("events")) {
      st.events.push_back(Event{event_from_name(ev.at(0).get<std::string>()),
                                ev.at(1).get<std::string>()});
    }
    std::vector<VisibleEntity> vis;
    for (const auto& v : js.at("vis")) {
      vis.push_back(VisibleEntity{v.at(0).get<std::string>(),
                                  v.at(1).get<bool>(), v.at(2).get<int>(),
                                  v.at(3).get<int>()});
    }
    b.traj.steps.push_back(std::move(st));
    b.visible.push_back(std::move(vis));
  }
  return b;
}

std::string to_jsonl(const Dataset& d) {
  std::string out;
  for (const auto& r : d.records) {
    json j;
    j["traj"] = r.traj;
    j["t"] = r.t;
    j["ins"] = r.instruction;
    j["obs"] = obs_json(r.obs);
    j["A"] = r.A ? json(codecs::serialize_abstracted(*r.A)) : json(nullptr);
    j["a"] = r.a ? json(codecs::serialize_text(*r.a)) : json(nullptr);
    j["space"] = std::string(codecs::space_name(r.space));
    out += j.dump();
    out += '\n';
  }
  return out;
}

Dataset from_jsonl(const std::string& text, DatasetKind kind,
                   const codecs::CodecConfig& codec_cfg) {
  Dataset d;
  d.kind = kind;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    DatasetRecord r;
    r.traj = j.at("traj").get<std::string>();
    r.t = j.at("t").get<int>();
    r.instruction = j.at("ins").get<std::string>();
    r.obs = obs_from(j.at("obs"));
    const auto space = codecs::space_from_name(j.at("space").get<std::string>());
    if (!space) throw BadConfigError("unknown space tag in dataset");
    r.space = *space;
    if (!j.at("A").is_null()) {
      r.A = codecs::parse_abstracted(j.at("A").get<std::string>(), codec_cfg,
                                     r.space);
    }
    if (!j.at("a").is_null()) {
      r.a = codecs::parse_text(j.at("a").get<std::string>());
    }
    d.records.push_back(std::move(r));
  }
  return d;
}

}  // namespace openha::labeler
