#include "openha/expert.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <optional>
#include <vector>

namespace openha::expert {

using minegrid::AgentState;
using minegrid::Cell;
using minegrid::Entity;
using minegrid::EntityKind;
using minegrid::GuiSlot;
using minegrid::Item;
using minegrid::TaskSpec;
using minegrid::World;

namespace {

int heading_of_delta(int dc, int dr) {
  if (dc == 0 && dr < 0) return 0;
  if (dc > 0 && dr < 0) return 45;
  if (dc > 0 && dr == 0) return 90;
  if (dc > 0 && dr > 0) return 135;
  if (dc == 0 && dr > 0) return 180;
  if (dc < 0 && dr > 0) return 225;
  if (dc < 0 && dr == 0) return 270;
  return 315;
}

// Signed shortest angular difference target - current, in (-180, 180].
int heading_diff(int current, int target) {
  int d = (target - current) % 360;
  if (d > 180) d -= 360;
  if (d <= -180) d += 360;
  return d;
}

bool walkable(const World& w, int col, int row) {
  return w.in_bounds(col, row) && w.at(col, row) == Cell::Empty;
}

// BFS over empty cells, 8-connected. Returns the first step toward the
// nearest of the goal cells, or nullopt when already at a goal cell.
std::optional<std::pair<int, int>> bfs_first_step(
    const World& w, int start_col, int start_row,
    const std::vector<std::pair<int, int>>& goals) {
  if (goals.empty()) throw minegrid::NoPathError("no goal cells");
  std::vector<int> parent(static_cast<std::size_t>(w.width) * w.height, -2);
  auto idx = [&](int c, int r) { return r * w.width + c; };
  for (const auto& [gc, gr] : goals) {
    if (gc == start_col && gr == start_row) return std::nullopt;
  }
  std::deque<std::pair<int, int>> queue;
  queue.push_back({start_col, start_row});
  parent[idx(start_col, start_row)] = -1;
  static constexpr int kD[8][2] = {{0, -1}, {1, -1}, {1, 0},  {1, 1},
                                   {0, 1},  {-1, 1}, {-1, 0}, {-1, -1}};
  int found = -1;
  while (!queue.empty() && found < 0) {
    const auto [c, r] = queue.front();
    queue.pop_front();
    for (const auto& d : kD) {
      const int nc = c + d[0];
      const int nr = r + d[1];
      if (!walkable(w, nc, nr) || parent[idx(nc, nr)] != -2) continue;
      parent[idx(nc, nr)] = idx(c, r);
      for (const auto& [gc, gr] : goals) {
        if (gc == nc && gr == nr) {
          found = idx(nc, nr);
          break;
        }
      }
      if (found >= 0) break;
      queue.push_back({nc, nr});
    }
  }
  if (found < 0) throw minegrid::NoPathError("goal unreachable");
  int cur = found;
  while (parent[cur] != idx(start_col, start_row) && parent[cur] != -1) {
    cur = parent[cur];
  }
  if (parent[cur] == -1) cur = found;  // start adjacent to itself
  return std::pair{cur % w.width - start_col, cur / w.width - start_row};
}

std::vector<std::pair<int, int>> adjacent_walkable(const World& w, int col,
                                                   int row) {
  std::vector<std::pair<int, int>> out;
  for (int dr = -1; dr <= 1; ++dr) {
    for (int dc = -1; dc <= 1; ++dc) {
      if (dc == 0 && dr == 0) continue;
      if (walkable(w, col + dc, row + dr)) out.push_back({col + dc, row + dr});
    }
  }
  return out;
}

// Turns toward the target heading; moves forward in the same tick when one
// camera step suffices (the heading updates before movement).
EnvAction navigate_step(const AgentState& agent, int dc, int dr) {
  EnvAction a;
  const int target = heading_of_delta(dc, dr);
  const int diff = heading_diff(agent.heading, target);
  if (diff != 0) a.camera_yaw = std::clamp(diff, -45, 45);
  if (std::abs(diff) <= 45) a.set(ButtonName::Forward);
  return a;
}

// Faces the goal cell and presses `button`, turning first if needed.
EnvAction face_and_press(const AgentState& agent, int goal_col, int goal_row,
                         ButtonName button) {
  EnvAction a;
  const int target =
      heading_of_delta(goal_col - agent.col, goal_row - agent.row);
  const int diff = heading_diff(agent.heading, target);
  if (diff != 0) {
    a.camera_yaw = std::clamp(diff, -45, 45);
    return a;
  }
  a.set(button);
  return a;
}

struct WorldGoal {
  int col = 0;
  int row = 0;
  bool found = false;
};

WorldGoal nearest_cell(const World& w, const AgentState& agent, Cell kind) {
  WorldGoal g;
  int best = 1 << 20;
  for (int row = 0; row < w.height; ++row) {
    for (int col = 0; col < w.width; ++col) {
      if (w.at(col, row) != kind) continue;
      const int d = std::max(std::abs(col - agent.col),
                             std::abs(row - agent.row));
      if (d < best) {
        best = d;
        g = WorldGoal{col, row, true};
      }
    }
  }
  return g;
}

WorldGoal nearest_entity(const World& w, const AgentState& agent,
                         EntityKind kind) {
  WorldGoal g;
  int best = 1 << 20;
  for (const auto& e : w.entities) {
    if (!e.alive || e.kind != kind) continue;
    const int d =
        std::max(std::abs(e.col - agent.col), std::abs(e.row - agent.row));
    if (d < best) {
      best = d;
      g = WorldGoal{e.col, e.row, true};
    }
  }
  return g;
}

EnvAction pursue(const World& w, const AgentState& agent, const WorldGoal& goal,
                 ButtonName interaction, bool press_when_adjacent = true) {
  const int dist = std::max(std::abs(goal.col - agent.col),
                            std::abs(goal.row - agent.row));
  if (dist <= 1) {
    if (!press_when_adjacent) return EnvAction{};  // stand by the goal
    return face_and_press(agent, goal.col, goal.row, interaction);
  }
  const auto step =
      bfs_first_step(w, agent.col, agent.row, adjacent_walkable(w, goal.col, goal.row));
  if (!step) return EnvAction{};
  return navigate_step(agent, step->first, step->second);
}

// --- GUI scripting ---------------------------------------------------------

// Moves the cursor toward a slot (bounded cursor hops), clicks on arrival.
EnvAction gui_click_slot(const AgentState& agent, int slot) {
  const int tc = slot % minegrid::kGuiSize;
  const int tr = slot / minegrid::kGuiSize;
  EnvAction a;
  const int dx = std::clamp(tc - agent.cursor_col, -2, 2);
  const int dy = std::clamp(tr - agent.cursor_row, -2, 2);
  if (dx != 0 || dy != 0) {
    a.camera_yaw = dx * 5.0;
    a.camera_pitch = dy * 5.0;
    return a;
  }
  a.set(ButtonName::Attack);
  return a;
}

int find_inventory_slot(const AgentState& agent, Item item) {
  for (int slot = 3 * minegrid::kGuiSize;
       slot < minegrid::kGuiSize * minegrid::kGuiSize; ++slot) {
    if (agent.gui[slot].item == item && agent.gui[slot].count > 0) return slot;
  }
  return -1;
}

EnvAction craft_in_gui(const AgentState& agent, Item ingredient, int needed) {
  // Output ready -> take it.
  if (agent.gui[minegrid::kGuiOutput].item != Item::None) {
    return gui_click_slot(agent, minegrid::kGuiOutput);
  }
  const GuiSlot& input = agent.gui[minegrid::kGuiInputA];
  const int placed = input.item == ingredient ? input.count : 0;
  if (placed < needed) {
    if (agent.held == ingredient) {
      return gui_click_slot(agent, minegrid::kGuiInputA);
    }
    const int src = find_inventory_slot(agent, ingredient);
    if (src >= 0) return gui_click_slot(agent, src);
  }
  return EnvAction{};  // nothing sensible left to do
}

}  // namespace

EnvAction scripted_expert(const TaskSpec& task, const AgentState& agent,
                          const World& world) {
  const std::string& id = task.id;

  if (agent.in_gui) {
    if (id == "craft_planks" || id == "place_log") {
      return craft_in_gui(agent, Item::OakLog, 1);
    }
    if (id == "craft_sticks") return craft_in_gui(agent, Item::Planks, 2);
    // Any other task has no business in the GUI; leave it.
    EnvAction esc;
    esc.set(ButtonName::Esc);
    return esc;
  }

  if (id == "chop_oak" || id == "chop_birch") {
    const Cell kind = id == "chop_oak" ? Cell::OakTree : Cell::BirchTree;
    const auto goal = nearest_cell(world, agent, kind);
    if (!goal.found) return EnvAction{};
    return pursue(world, agent, goal, ButtonName::Attack);
  }
  if (id == "approach_sheep") {
    const auto goal = nearest_entity(world, agent, EntityKind::Sheep);
    if (!goal.found) return EnvAction{};
    return pursue(world, agent, goal, ButtonName::Attack, false);
  }
  if (id == "approach_table" || id == "open_crafting_table") {
    const auto goal = nearest_cell(world, agent, Cell::CraftingTable);
    if (!goal.found) return EnvAction{};
    const bool open = id == "open_crafting_table";
    return pursue(world, agent, goal, ButtonName::Use, open);
  }
  if (id == "craft_planks" || id == "craft_sticks" || id == "place_log") {
    // Not in the GUI yet: walk to the table and open it.
    const auto goal = nearest_cell(world, agent, Cell::CraftingTable);
    if (!goal.found) return EnvAction{};
    return pursue(world, agent, goal, ButtonName::Use);
  }
  if (id == "kill_zombie" || id == "kill_spider" || id == "kill_sheep" ||
      id == "survive_zombie") {
    const EntityKind kind = id == "kill_spider"  ? EntityKind::Spider
                            : id == "kill_sheep" ? EntityKind::Sheep
                                                 : EntityKind::Zombie;
    // Any hostile within reach takes priority; it deals damage while ignored.
    WorldGoal threat;
    int threat_dist = 3;
    for (const auto& e : world.entities) {
      if (!e.alive || e.kind == EntityKind::Sheep) continue;
      const int d = std::max(std::abs(e.col - agent.col),
                             std::abs(e.row - agent.row));
      if (d < threat_dist) {
        threat_dist = d;
        threat = WorldGoal{e.col, e.row, true};
      }
    }
    if (threat.found) {
      return pursue(world, agent, threat, ButtonName::Attack);
    }
    const auto goal = nearest_entity(world, agent, kind);
    if (!goal.found) return EnvAction{};  // dead already; stand by
    return pursue(world, agent, goal, ButtonName::Attack);
  }
  return EnvAction{};
}

}  // namespace openha::expert
