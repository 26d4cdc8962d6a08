#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "openha/action.hpp"
#include "openha/rng.hpp"

namespace openha::minegrid {

enum class Cell : int {
  Empty = 0,
  OakTree,
  BirchTree,
  Rock,
  Water,
  CraftingTable,
  Furnace,
  Void,  // observation-only: outside the world
};
inline constexpr int kNumCellKinds = 8;

enum class EntityKind : int { Sheep = 0, Zombie, Spider };
inline constexpr int kNumEntityKinds = 3;

std::string_view cell_object_name(Cell c);        // "oak_log", "rock", ...
std::string_view entity_object_name(EntityKind);  // "sheep", ...
int entity_max_health(EntityKind k);

struct Entity {
  EntityKind kind;
  int col = 0;
  int row = 0;
  int health = 1;
  bool alive = true;
};

struct WorldConfig {
  int width = 32;
  int height = 32;
  double oak_density = 0.03;
  double birch_density = 0.02;
  double rock_density = 0.03;
  double water_density = 0.02;
  int sheep = 2;
  int zombies = 1;
  int spiders = 1;
  bool place_crafting_table = true;
  bool place_furnace = false;
};

struct World {
  int width = 0;
  int height = 0;
  std::vector<Cell> cells;
  std::vector<Entity> entities;
  std::uint64_t seed = 0;

  bool in_bounds(int col, int row) const {
    return col >= 0 && col < width && row >= 0 && row < height;
  }
  Cell at(int col, int row) const { return cells[row * width + col]; }
  void set(int col, int row, Cell c) { cells[row * width + col] = c; }
};

struct UnsatisfiableTaskError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NoPathError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Items that can appear in the inventory and in GUI slots.
enum class Item : int { None = 0, OakLog, BirchLog, Planks, Stick };
inline constexpr int kNumItems = 5;
std::string_view item_name(Item it);
std::optional<Item> item_from_name(std::string_view s);

enum class EventKind : int {
  LogGained = 0,
  MobKilled,
  Crafted,
  GuiOpened,
  GuiClosed,
  ItemPicked,
  ItemPlaced,
  AgentHurt,
  GoalReached,
  IllegalInput,
};

struct Event {
  EventKind kind;
  std::string detail;  // item / mob name, or a short note
  bool operator==(const Event&) const = default;
};

// 5x5 crafting screen. Fixed slot layout:
//   input slots (1,1) and (2,1); output slot (3,1);
//   inventory strip on rows 3 and 4, filled left to right.
inline constexpr int kGuiSize = 5;
inline constexpr int kGuiInputA = 1 * kGuiSize + 1;
inline constexpr int kGuiInputB = 1 * kGuiSize + 2;
inline constexpr int kGuiOutput = 1 * kGuiSize + 3;

struct GuiSlot {
  Item item = Item::None;
  int count = 0;
  bool operator==(const GuiSlot&) const = default;
};

struct AgentState {
  int col = 0;
  int row = 0;
  int heading = 0;     // degrees in {0,45,...,315}; 0 = north, 90 = east
  int pitch = 0;       // degrees in {-45, 0, 45}
  double yaw_accum = 0.0;    // camera accumulator toward the next heading step
  double pitch_accum = 0.0;
  std::map<std::string, int> inventory;
  int health = 20;
  bool in_gui = false;
  std::vector<GuiSlot> gui;  // kGuiSize^2 slots when in_gui
  int cursor_col = 2;
  int cursor_row = 2;
  Item held = Item::None;
  int held_count = 0;
  int hotbar_slot = 1;
  // tree-breaking progress (consecutive attacks on the same cell)
  int break_col = -1;
  int break_row = -1;
  int break_progress = 0;
  int tick = 0;
};

struct ObsCell {
  int terrain = static_cast<int>(Cell::Void);
  int entity = 0;  // 0 none, 1 sheep, 2 zombie, 3 spider
  bool operator==(const ObsCell&) const = default;
};

inline constexpr int kViewSize = 9;  // V x V egocentric window, agent centered

struct Observation {
  int view_size = kViewSize;
  std::vector<ObsCell> view;  // north-up window, agent at center
  int health = 20;
  int heading = 0;
  int pitch = 0;
  std::string selected_item;  // held item in GUI mode, else hotbar item
  bool gui_mode = false;
  std::vector<GuiSlot> gui;  // kGuiSize^2 slots, empty when not in GUI
  int cursor_col = -1;
  int cursor_row = -1;
  bool operator==(const Observation&) const = default;
};

enum class TaskCategory : int { Embodied = 0, GUI, Combat };
std::string_view category_name(TaskCategory c);

struct TaskSpec {
  std::string id;
  TaskCategory category = TaskCategory::Embodied;
  std::string instruction;
  int max_steps = 400;
  // world-generation requirements
  std::vector<Cell> required_cells;
  std::vector<EntityKind> required_entities;
  // episode start
  bool start_in_gui = false;
  bool start_facing_table = false;
  std::map<std::string, int> starting_inventory;
};

// The benchmark suite: >= 4 tasks in each of the three categories.
const std::vector<TaskSpec>& task_suite();
const TaskSpec& task_by_id(const std::string& id);

World generate_world(std::uint64_t seed, const WorldConfig& cfg,
                     const std::vector<Cell>& required_cells = {},
                     const std::vector<EntityKind>& required_entities = {});

struct VisibleEntity {
  std::string name;   // object name, e.g. "oak_log" or "sheep"
  bool is_block = false;
  int col = 0;  // observation-frame coordinate
  int row = 0;
};

std::vector<VisibleEntity> visible_entities(const AgentState& agent,
                                            const World& world);

Observation observe(const AgentState& agent, const World& world);

// Advances the world one tick. Mutates world (broken blocks, mobs) and agent;
// illegal inputs are no-ops recorded as IllegalInput events.
std::vector<Event> step(World& world, AgentState& agent, const EnvAction& a,
                        Rng& mob_rng);

bool success(const TaskSpec& task, const AgentState& agent,
             const std::vector<Event>& all_events);

// Owns one episode: world, agent, mob RNG stream, event log.
class Env {
 public:
  Env(const TaskSpec& task, std::uint64_t seed, WorldConfig cfg = {});

  Observation reset();  // deterministic per (task, seed)
  struct StepResult {
    Observation obs;
    std::vector<Event> events;
    bool success = false;
  };
  StepResult step(const EnvAction& a);

  const TaskSpec& task() const { return task_; }
  const World& world() const { return world_; }
  const AgentState& agent() const { return agent_; }
  const std::vector<Event>& events() const { return all_events_; }
  int steps() const { return agent_.tick; }

 private:
  TaskSpec task_;
  std::uint64_t seed_;
  WorldConfig cfg_;
  World world_;
  AgentState agent_;
  Rng rng_;
  std::vector<Event> all_events_;
};

// Heading helpers shared with the scripted experts.
std::pair<int, int> heading_delta(int heading_deg);  // (dcol, drow)

}  // namespace openha::minegrid
