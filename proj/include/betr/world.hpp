#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "betr/behavior.hpp"
#include "betr/btree.hpp"
#include "betr/rng.hpp"

namespace betr {

enum class Task { Foraging, NestMaintenance };

std::string_view to_string(Task t);
std::optional<Task> parse_task(std::string_view s);

struct Cell {
  int x = 0;
  int y = 0;
  auto operator<=>(const Cell&) const = default;
};

inline int chebyshev(Cell a, Cell b) {
  const int dx = a.x > b.x ? a.x - b.x : b.x - a.x;
  const int dy = a.y > b.y ? a.y - b.y : b.y - a.y;
  return dx > dy ? dx : dy;
}

/// Circular region with a continuous center; its footprint is every cell
/// whose center lies within `radius`.
struct Disc {
  double x = 0;
  double y = 0;
  double radius = 1;

  double distance(Cell c) const;
  bool contains(Cell c) const;
};

struct WorldConfig {
  int grid_half_extent = 50;  // cells span [-h, h-1] on both axes
  double hub_radius = 10;
  double site_radius = 10;
  double site_distance = 30;
  double boundary_radius = 30;
  int object_count = 100;
  double agent_speed = 2;
  int perception_range = 5;  // Chebyshev radius for sensing and gene exchange
  std::size_t carry_capacity = 1;
  std::vector<Disc> obstacles;
  std::vector<Disc> traps;

  /// Throws std::invalid_argument on an unusable configuration.
  void validate() const;
};

struct WorldObject {
  int id = 0;
  Entity kind = Entity::Food;
  Cell position;                  // meaningful only while not carried
  std::optional<int> carried_by;  // agent id
};

struct AgentBody {
  int id = 0;
  Cell position;
  double heading = 0;
  std::vector<int> inventory;  // object ids
  std::size_t visited_count = 0;
  bool visited_hub = false;
  bool visited_site = false;
  bool alive = true;
  bool moved_this_tick = false;

  bool carrying(Entity kind, const std::vector<WorldObject>& objects) const;
};

class World {
 public:
  World(WorldConfig config, Task task);

  const WorldConfig& config() const { return config_; }
  Task task() const { return task_; }
  const Disc& hub() const { return hub_; }
  const std::vector<Disc>& sites() const { return sites_; }
  const std::vector<WorldObject>& objects() const { return objects_; }
  const std::vector<AgentBody>& agents() const { return agents_; }
  AgentBody& agent(int id) { return agents_.at(static_cast<std::size_t>(id)); }
  const AgentBody& agent(int id) const { return agents_.at(static_cast<std::size_t>(id)); }
  std::size_t step() const { return step_; }
  void advance_step() { ++step_; }

  void add_site(Disc site);
  int add_object(Entity kind, Cell at);
  int add_agent(Cell at, double heading = 0);

  int min_coord() const { return -config_.grid_half_extent; }
  int max_coord() const { return config_.grid_half_extent - 1; }
  bool in_bounds(Cell c) const;
  Cell clamp(Cell c) const;
  bool is_obstacle(Cell c) const { return flag(c, kObstacle); }
  bool is_trap(Cell c) const { return flag(c, kTrap); }
  bool in_hub(Cell c) const { return flag(c, kHub); }
  bool in_site(Cell c) const { return flag(c, kSite); }
  bool at_edge(Cell c) const;
  bool visited(const AgentBody& a, Cell c) const;

  Cell object_position(const WorldObject& o) const;
  int uncarried_count(Entity kind, Cell c) const;
  bool entity_near(Entity e, Cell c, int range) const;

  // Moves an agent to `to` (already validated), updating memory, carry
  // bookkeeping and trap lethality. Returns whether the cell changed.
  bool relocate(AgentBody& agent, Cell to, TickTrace* trace);
  bool pick_up(AgentBody& agent, Entity kind);
  // Returns the dropped object id.
  std::optional<int> drop(AgentBody& agent, Entity kind);

  /// Whether dropping an object of `kind` at `c` advances the task.
  bool goal_location(Entity kind, Cell c) const;

 private:
  static constexpr std::uint8_t kObstacle = 1, kTrap = 2, kHub = 4, kSite = 8;

  std::size_t index(Cell c) const;
  bool flag(Cell c, std::uint8_t f) const { return in_bounds(c) && (cells_[index(c)] & f); }
  void paint(const Disc& d, std::uint8_t f);
  void mark_visited(AgentBody& a);
  std::vector<std::uint16_t>& counts(Entity kind);
  const std::vector<std::uint16_t>& counts(Entity kind) const;

  WorldConfig config_;
  Task task_;
  Disc hub_;
  std::vector<Disc> sites_;
  std::vector<WorldObject> objects_;
  std::vector<AgentBody> agents_;
  std::vector<std::uint8_t> cells_;
  std::vector<std::uint16_t> food_counts_;
  std::vector<std::uint16_t> debris_counts_;
  std::vector<std::vector<std::uint8_t>> visited_;  // per agent, per cell
  std::size_t step_ = 0;
};

/// Foraging: one site on the circle of radius site_distance, food inside it.
/// Nest maintenance: debris within hub_radius of the origin. Objects number
/// config.object_count; `agent_count` agents (default object_count) start on
/// random hub cells.
World init_world(const WorldConfig& config, Task task, Rng& rng, std::optional<std::size_t> agent_count = {});

/// Throws EvaluationError for names/combinations outside the vocabulary.
bool eval_condition(Behavior b, int agent, const World& world);
bool eval_condition(std::string_view name, int agent, const World& world);

/// One primitive step. Movement uses bug-following around obstacles and
/// traps on the line of sight; an agent moves at most once per tick (further
/// moves in the same tick return Running). Inapplicable actions fail.
TickStatus execute_action(Behavior b, int agent, World& world, Rng& rng, TickTrace& trace);
TickStatus execute_action(std::string_view name, int agent, World& world, Rng& rng, TickTrace& trace);

/// Fraction of food resting inside the hub, or of debris resting beyond the
/// boundary radius.
double task_performance(const World& world);

/// JSON snapshot: step, regions, objects, agents.
std::string snapshot_json(const World& world);

/// Integer step closest to (dx, dy) whose length does not exceed `speed`.
Cell quantize_step(double dx, double dy, double speed);

}  // namespace betr
