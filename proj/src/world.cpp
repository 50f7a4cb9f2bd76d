#include "betr/world.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

namespace betr {

std::string_view to_string(Task t) { return t == Task::Foraging ? "foraging" : "nest_maintenance"; }

std::optional<Task> parse_task(std::string_view s) {
  if (s == "foraging" || s == "Foraging") return Task::Foraging;
  if (s == "nest_maintenance" || s == "NestMaintenance" || s == "nest") return Task::NestMaintenance;
  return std::nullopt;
}

double Disc::distance(Cell c) const { return std::hypot(c.x - x, c.y - y); }

bool Disc::contains(Cell c) const {
  const double dx = c.x - x, dy = c.y - y;
  return dx * dx + dy * dy <= radius * radius + 1e-9;
}

void WorldConfig::validate() const {
  if (grid_half_extent <= 0) throw std::invalid_argument("grid_half_extent must be positive");
  if (hub_radius <= 0 || site_radius <= 0 || boundary_radius <= 0)
    throw std::invalid_argument("hub, site and boundary radii must be positive");
  if (site_distance < hub_radius + site_radius)
    throw std::invalid_argument("site overlaps the hub: site_distance < hub_radius + site_radius");
  if (site_distance + site_radius > grid_half_extent - 1)
    throw std::invalid_argument("site does not fit inside the grid");
  if (object_count <= 0) throw std::invalid_argument("object_count must be positive");
  if (agent_speed <= 0) throw std::invalid_argument("agent_speed must be positive");
  if (perception_range < 0) throw std::invalid_argument("perception_range must be non-negative");
  if (carry_capacity == 0) throw std::invalid_argument("carry_capacity must be positive");
  for (const auto& d : obstacles)
    if (d.radius <= 0) throw std::invalid_argument("obstacle radius must be positive");
  for (const auto& d : traps)
    if (d.radius <= 0) throw std::invalid_argument("trap radius must be positive");
}

bool AgentBody::carrying(Entity kind, const std::vector<WorldObject>& objects) const {
  return std::any_of(inventory.begin(), inventory.end(),
                     [&](int id) { return objects[static_cast<std::size_t>(id)].kind == kind; });
}

World::World(WorldConfig config, Task task) : config_(std::move(config)), task_(task) {
  hub_ = Disc{0, 0, config_.hub_radius};
  const auto side = static_cast<std::size_t>(2 * config_.grid_half_extent);
  cells_.assign(side * side, 0);
  food_counts_.assign(side * side, 0);
  debris_counts_.assign(side * side, 0);
  paint(hub_, kHub);
  for (const auto& o : config_.obstacles) paint(o, kObstacle);
  for (const auto& t : config_.traps) paint(t, kTrap);
}

std::size_t World::index(Cell c) const {
  const auto side = 2 * config_.grid_half_extent;
  return static_cast<std::size_t>((c.y + config_.grid_half_extent) * side + (c.x + config_.grid_half_extent));
}

bool World::in_bounds(Cell c) const {
  return c.x >= min_coord() && c.x <= max_coord() && c.y >= min_coord() && c.y <= max_coord();
}

Cell World::clamp(Cell c) const {
  return {std::clamp(c.x, min_coord(), max_coord()), std::clamp(c.y, min_coord(), max_coord())};
}

bool World::at_edge(Cell c) const {
  return c.x == min_coord() || c.x == max_coord() || c.y == min_coord() || c.y == max_coord();
}

void World::paint(const Disc& d, std::uint8_t f) {
  const int x0 = static_cast<int>(std::floor(d.x - d.radius)), x1 = static_cast<int>(std::ceil(d.x + d.radius));
  const int y0 = static_cast<int>(std::floor(d.y - d.radius)), y1 = static_cast<int>(std::ceil(d.y + d.radius));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x)
      if (in_bounds({x, y}) && d.contains({x, y})) cells_[index({x, y})] |= f;
}

void World::add_site(Disc site) {
  sites_.push_back(site);
  paint(site, kSite);
}

std::vector<std::uint16_t>& World::counts(Entity kind) {
  return kind == Entity::Food ? food_counts_ : debris_counts_;
}
const std::vector<std::uint16_t>& World::counts(Entity kind) const {
  return kind == Entity::Food ? food_counts_ : debris_counts_;
}

int World::add_object(Entity kind, Cell at) {
  if (kind != Entity::Food && kind != Entity::Debris) throw std::invalid_argument("objects are Food or Debris");
  if (!in_bounds(at)) throw std::invalid_argument("object outside the grid");
  const int id = static_cast<int>(objects_.size());
  objects_.push_back(WorldObject{id, kind, at, std::nullopt});
  ++counts(kind)[index(at)];
  return id;
}

int World::add_agent(Cell at, double heading) {
  if (!in_bounds(at)) throw std::invalid_argument("agent outside the grid");
  AgentBody a;
  a.id = static_cast<int>(agents_.size());
  a.position = at;
  a.heading = heading;
  agents_.push_back(std::move(a));
  visited_.emplace_back(cells_.size(), 0);
  mark_visited(agents_.back());
  if (is_trap(at)) agents_.back().alive = false;
  return agents_.back().id;
}

bool World::visited(const AgentBody& a, Cell c) const {
  return in_bounds(c) && visited_[static_cast<std::size_t>(a.id)][index(c)] != 0;
}

void World::mark_visited(AgentBody& a) {
  auto& v = visited_[static_cast<std::size_t>(a.id)][index(a.position)];
  if (!v) {
    v = 1;
    ++a.visited_count;
  }
  a.visited_hub = a.visited_hub || in_hub(a.position);
  a.visited_site = a.visited_site || in_site(a.position);
}

Cell World::object_position(const WorldObject& o) const {
  return o.carried_by ? agent(*o.carried_by).position : o.position;
}

int World::uncarried_count(Entity kind, Cell c) const {
  if ((kind != Entity::Food && kind != Entity::Debris) || !in_bounds(c)) return 0;
  return counts(kind)[index(c)];
}

bool World::entity_near(Entity e, Cell c, int range) const {
  switch (e) {
    case Entity::Hub:
    case Entity::Sites: {
      const std::uint8_t f = e == Entity::Hub ? kHub : kSite;
      if (flag(c, f)) return true;
      const double reach = range * std::numbers::sqrt2 + 1.0;
      const auto near = [&](const Disc& d) { return d.distance(c) <= d.radius + reach; };
      if (e == Entity::Hub ? !near(hub_) : std::none_of(sites_.begin(), sites_.end(), near)) return false;
      for (int y = c.y - range; y <= c.y + range; ++y)
        for (int x = c.x - range; x <= c.x + range; ++x)
          if (flag({x, y}, f)) return true;
      return false;
    }
    case Entity::Food:
    case Entity::Debris:
      for (int y = c.y - range; y <= c.y + range; ++y)
        for (int x = c.x - range; x <= c.x + range; ++x)
          if (uncarried_count(e, {x, y}) > 0) return true;
      return false;
    case Entity::Obstacles:
    case Entity::Trap: {
      const std::uint8_t f = e == Entity::Obstacles ? kObstacle : kTrap;
      for (int y = c.y - range; y <= c.y + range; ++y)
        for (int x = c.x - range; x <= c.x + range; ++x)
          if (flag({x, y}, f)) return true;
      return false;
    }
    default:
      return false;
  }
}

bool World::relocate(AgentBody& a, Cell to, TickTrace* trace) {
  if (!a.alive) return false;
  to = clamp(to);
  const bool moved = to != a.position;
  a.position = to;
  mark_visited(a);
  if (moved && !a.inventory.empty() && trace) trace->record_carry_step();
  if (is_trap(to)) a.alive = false;
  return moved;
}

bool World::pick_up(AgentBody& a, Entity kind) {
  if (!a.alive || a.inventory.size() >= config_.carry_capacity) return false;
  if (uncarried_count(kind, a.position) == 0) return false;
  for (auto& o : objects_) {
    if (o.kind == kind && !o.carried_by && o.position == a.position) {
      o.carried_by = a.id;
      --counts(kind)[index(a.position)];
      a.inventory.push_back(o.id);
      return true;
    }
  }
  return false;
}

std::optional<int> World::drop(AgentBody& a, Entity kind) {
  if (!a.alive) return std::nullopt;
  for (auto it = a.inventory.begin(); it != a.inventory.end(); ++it) {
    auto& o = objects_[static_cast<std::size_t>(*it)];
    if (o.kind != kind) continue;
    o.carried_by.reset();
    o.position = a.position;
    ++counts(kind)[index(a.position)];
    const int id = *it;
    a.inventory.erase(it);
    return id;
  }
  return std::nullopt;
}

bool World::goal_location(Entity kind, Cell c) const {
  if (task_ == Task::Foraging) return kind == Entity::Food && in_hub(c);
  return kind == Entity::Debris && hub_.distance(c) > config_.boundary_radius;
}

// ---------------------------------------------------------------------------

World init_world(const WorldConfig& config, Task task, Rng& rng, std::optional<std::size_t> agent_count) {
  config.validate();
  World w(config, task);

  auto free_cells = [&](const Disc& d) {
    std::vector<Cell> cells;
    const int r = static_cast<int>(std::ceil(d.radius)) + 1;
    for (int y = static_cast<int>(std::floor(d.y)) - r; y <= static_cast<int>(std::ceil(d.y)) + r; ++y)
      for (int x = static_cast<int>(std::floor(d.x)) - r; x <= static_cast<int>(std::ceil(d.x)) + r; ++x)
        if (w.in_bounds({x, y}) && d.contains({x, y}) && !w.is_obstacle({x, y}) && !w.is_trap({x, y}))
          cells.push_back({x, y});
    if (cells.empty()) throw std::invalid_argument("region has no free cells");
    return cells;
  };

  const auto n_objects = static_cast<std::size_t>(config.object_count);
  if (task == Task::Foraging) {
    const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const Disc site{config.site_distance * std::cos(angle), config.site_distance * std::sin(angle),
                    config.site_radius};
    w.add_site(site);
    const auto cells = free_cells(site);
    for (std::size_t i = 0; i < n_objects; ++i) w.add_object(Entity::Food, cells[rng.below(cells.size())]);
  } else {
    const auto cells = free_cells(Disc{0, 0, config.hub_radius});
    for (std::size_t i = 0; i < n_objects; ++i) w.add_object(Entity::Debris, cells[rng.below(cells.size())]);
  }

  const auto hub_cells = free_cells(w.hub());
  const std::size_t n_agents = agent_count.value_or(n_objects);
  for (std::size_t i = 0; i < n_agents; ++i) {
    const auto at = hub_cells[rng.below(hub_cells.size())];
    w.add_agent(at, rng.uniform(0.0, 2.0 * std::numbers::pi));
  }
  return w;
}

// ---------------------------------------------------------------------------

namespace {

bool is_site_like(Entity e) { return e == Entity::Hub || e == Entity::Sites; }
bool is_movable(Entity e) { return e == Entity::Food || e == Entity::Debris; }

[[noreturn]] void unsupported(Behavior b) {
  throw EvaluationError("unsupported behavior '" + to_string(b) + "'");
}

bool can_move(const AgentBody& a, const World& w) {
  if (!a.alive) return false;
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      if (dx == 0 && dy == 0) continue;
      const Cell c{a.position.x + dx, a.position.y + dy};
      if (w.in_bounds(c) && !w.is_obstacle(c)) return true;
    }
  return false;
}

bool inside(Entity e, const AgentBody& a, const World& w) {
  if (e == Entity::Hub) return w.in_hub(a.position);
  if (e == Entity::Sites) return w.in_site(a.position);
  unsupported({Verb::IsInside, e});
}

// Nearest point of interest for movement; nullopt if the entity is absent.
std::optional<std::pair<double, double>> target_of(Entity e, const AgentBody& a, const World& w) {
  const auto closest = [&](auto begin, auto end, auto point_of) -> std::optional<std::pair<double, double>> {
    std::optional<std::pair<double, double>> best;
    double best_d = std::numeric_limits<double>::infinity();
    for (auto it = begin; it != end; ++it) {
      const auto p = point_of(*it);
      if (!p) continue;
      const double d = std::hypot(p->first - a.position.x, p->second - a.position.y);
      if (d < best_d) best_d = d, best = p;
    }
    return best;
  };
  const auto disc_center = [](const Disc& d) { return std::optional<std::pair<double, double>>({d.x, d.y}); };
  switch (e) {
    case Entity::Hub: return std::pair<double, double>{w.hub().x, w.hub().y};
    case Entity::Sites: return closest(w.sites().begin(), w.sites().end(), disc_center);
    case Entity::Obstacles:
      return closest(w.config().obstacles.begin(), w.config().obstacles.end(), disc_center);
    case Entity::Trap: return closest(w.config().traps.begin(), w.config().traps.end(), disc_center);
    case Entity::Food:
    case Entity::Debris:
      return closest(w.objects().begin(), w.objects().end(),
                     [&](const WorldObject& o) -> std::optional<std::pair<double, double>> {
                       if (o.kind != e || o.carried_by) return std::nullopt;
                       return std::pair<double, double>{o.position.x, o.position.y};
                     });
    default: return std::nullopt;
  }
}

// Cells on the segment from `from` to `to`, excluding `from`.
template <class Fn>
std::optional<Cell> first_on_line(Cell from, Cell to, Fn blocked) {
  int x = from.x, y = from.y;
  const int dx = std::abs(to.x - x), sx = x < to.x ? 1 : -1;
  const int dy = -std::abs(to.y - y), sy = y < to.y ? 1 : -1;
  int err = dx + dy;
  while (x != to.x || y != to.y) {
    const int e2 = 2 * err;
    if (e2 >= dy) err += dy, x += sx;
    if (e2 <= dx) err += dx, y += sy;
    if (blocked(Cell{x, y})) return Cell{x, y};
  }
  return std::nullopt;
}

const Disc* blocker_containing(const World& w, Cell c) {
  for (const auto& d : w.config().obstacles)
    if (d.contains(c)) return &d;
  for (const auto& d : w.config().traps)
    if (d.contains(c)) return &d;
  return nullptr;
}

Cell unit_step_towards(double tx, double ty) {
  Cell best{0, 0};
  double best_dot = -std::numeric_limits<double>::infinity();
  for (int dy = -1; dy <= 1; ++dy)
    for (int dx = -1; dx <= 1; ++dx) {
      if (dx == 0 && dy == 0) continue;
      const double dot = (dx * tx + dy * ty) / std::hypot(dx, dy);
      if (dot > best_dot + 1e-12) best_dot = dot, best = {dx, dy};
    }
  return best;
}

TickStatus move_along(World& w, AgentBody& a, double dx, double dy, TickTrace& trace) {
  if (!a.alive) return TickStatus::Failure;
  if (a.moved_this_tick) return TickStatus::Running;
  const double speed = w.config().agent_speed;
  if (const double len = std::hypot(dx, dy); len > speed) dx *= speed / len, dy *= speed / len;
  if (dx != 0 || dy != 0) a.heading = std::atan2(dy, dx);

  const Cell step = quantize_step(dx, dy, speed);
  Cell dest = w.clamp({a.position.x + step.x, a.position.y + step.y});
  const auto hit = first_on_line(a.position, dest, [&](Cell c) { return w.is_obstacle(c) || w.is_trap(c); });
  if (hit) {
    // bug following: one unit step along the blocker's surface
    const Disc* blocker = blocker_containing(w, *hit);
    const double vx = a.position.x - blocker->x, vy = a.position.y - blocker->y;
    std::pair<double, double> tangents[2] = {{-vy, vx}, {vy, -vx}};
    if (tangents[1].first * dx + tangents[1].second * dy > tangents[0].first * dx + tangents[0].second * dy)
      std::swap(tangents[0], tangents[1]);
    std::optional<Cell> lateral;
    for (const auto& [tx, ty] : tangents) {
      const Cell off = unit_step_towards(tx, ty);
      const Cell c = w.clamp({a.position.x + off.x, a.position.y + off.y});
      if (c != a.position && !w.is_obstacle(c)) {
        lateral = c;
        break;
      }
    }
    if (!lateral) return TickStatus::Failure;
    dest = *lateral;
  }
  a.moved_this_tick = true;
  w.relocate(a, dest, &trace);
  return TickStatus::Success;
}

}  // namespace

Cell quantize_step(double dx, double dy, double speed) {
  const int r = static_cast<int>(std::floor(speed + 1e-9));
  Cell best{0, 0};
  double best_err = std::numeric_limits<double>::infinity();
  for (int oy = -r; oy <= r; ++oy)
    for (int ox = -r; ox <= r; ++ox) {
      if (ox * ox + oy * oy > speed * speed + 1e-9) continue;
      const double err = (ox - dx) * (ox - dx) + (oy - dy) * (oy - dy);
      if (err < best_err - 1e-12) best_err = err, best = {ox, oy};
    }
  return best;
}

bool eval_condition(Behavior b, int agent_id, const World& w) {
  const AgentBody& a = w.agent(agent_id);
  const Entity e = b.entity;
  switch (b.verb) {
    case Verb::DummyNode:
      return true;
    case Verb::CanMove:
      return can_move(a, w);
    case Verb::NeighbourObjects:
      if (e == Entity::None) unsupported(b);
      return w.entity_near(e, a.position, w.config().perception_range);
    case Verb::IsVisitedBefore:
      if (e == Entity::Hub) return a.visited_hub;
      if (e == Entity::Sites) return a.visited_site;
      unsupported(b);
    case Verb::IsDropable:
      if (e == Entity::Hub)
        return w.task() == Task::Foraging ? w.in_hub(a.position)
                                          : w.hub().distance(a.position) > w.config().boundary_radius;
      if (e == Entity::Sites) return w.in_site(a.position);
      unsupported(b);
    case Verb::IsCarrying:
    case Verb::AlreadyCarrying:
      if (!is_movable(e)) unsupported(b);
      return a.carrying(e, w.objects());
    case Verb::NotCarrying:
      if (!is_movable(e)) unsupported(b);
      return !a.carrying(e, w.objects());
    case Verb::IsCarryable:
      if (!is_movable(e)) unsupported(b);
      return w.uncarried_count(e, a.position) > 0;
    case Verb::IsInside:
      if (!is_site_like(e)) unsupported(b);
      return inside(e, a, w);
    case Verb::AtEdge:
      return w.at_edge(a.position);
    default:
      unsupported(b);
  }
}

bool eval_condition(std::string_view name, int agent, const World& world) {
  const auto b = parse_behavior(name);
  if (!b || !b->is_condition()) throw EvaluationError("unknown condition '" + std::string(name) + "'");
  return eval_condition(*b, agent, world);
}

TickStatus execute_action(Behavior b, int agent_id, World& w, Rng& rng, TickTrace& trace) {
  AgentBody& a = w.agent(agent_id);
  const Entity e = b.entity;
  switch (b.verb) {
    case Verb::Explore: {
      if (!a.alive) return TickStatus::Failure;
      if (a.moved_this_tick) return TickStatus::Running;
      const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double s = w.config().agent_speed;
      return move_along(w, a, s * std::cos(angle), s * std::sin(angle), trace);
    }
    case Verb::MoveTowards:
    case Verb::MoveAway: {
      if (e == Entity::None) unsupported(b);
      if (!a.alive) return TickStatus::Failure;
      if (a.moved_this_tick) return TickStatus::Running;
      const auto target = target_of(e, a, w);
      if (!target) return TickStatus::Failure;
      double dx = target->first - a.position.x, dy = target->second - a.position.y;
      if (b.verb == Verb::MoveAway) {
        dx = -dx, dy = -dy;
        if (std::hypot(dx, dy) < 1e-9) {
          const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
          dx = std::cos(angle), dy = std::sin(angle);
        }
        const double len = std::hypot(dx, dy);
        dx *= w.config().agent_speed / len, dy *= w.config().agent_speed / len;
      }
      return move_along(w, a, dx, dy, trace);
    }
    case Verb::SingleCarry:
      if (!is_movable(e)) unsupported(b);
      if (!w.pick_up(a, e)) return TickStatus::Failure;
      trace.record_pickup();
      return TickStatus::Success;
    case Verb::Drop: {
      if (!is_movable(e)) unsupported(b);
      if (!w.drop(a, e)) return TickStatus::Failure;
      trace.record_drop(w.goal_location(e, a.position));
      return TickStatus::Success;
    }
    default:
      throw EvaluationError("'" + to_string(b) + "' is not an action");
  }
}

TickStatus execute_action(std::string_view name, int agent, World& world, Rng& rng, TickTrace& trace) {
  const auto b = parse_behavior(name);
  if (!b || !b->is_action()) throw EvaluationError("unknown action '" + std::string(name) + "'");
  return execute_action(*b, agent, world, rng, trace);
}

double task_performance(const World& w) {
  const Entity kind = w.task() == Task::Foraging ? Entity::Food : Entity::Debris;
  std::size_t total = 0, done = 0;
  for (const auto& o : w.objects()) {
    if (o.kind != kind) continue;
    ++total;
    if (!o.carried_by && w.goal_location(kind, o.position)) ++done;
  }
  return total == 0 ? 0.0 : static_cast<double>(done) / static_cast<double>(total);
}

std::string snapshot_json(const World& w) {
  using nlohmann::json;
  const auto disc = [](const Disc& d) { return json{{"x", d.x}, {"y", d.y}, {"radius", d.radius}}; };
  json j;
  j["step"] = w.step();
  j["task"] = to_string(w.task());
  j["hub"] = disc(w.hub());
  j["sites"] = json::array();
  for (const auto& s : w.sites()) j["sites"].push_back(disc(s));
  j["obstacles"] = json::array();
  for (const auto& o : w.config().obstacles) j["obstacles"].push_back(disc(o));
  j["traps"] = json::array();
  for (const auto& t : w.config().traps) j["traps"].push_back(disc(t));
  j["objects"] = json::array();
  for (const auto& o : w.objects()) {
    const auto p = w.object_position(o);
    json jo{{"id", o.id}, {"kind", to_string(o.kind)}, {"x", p.x}, {"y", p.y}};
    jo["carried_by"] = o.carried_by ? json(*o.carried_by) : json(nullptr);
    j["objects"].push_back(std::move(jo));
  }
  j["agents"] = json::array();
  for (const auto& a : w.agents()) {
    j["agents"].push_back({{"id", a.id},
                           {"x", a.position.x},
                           {"y", a.position.y},
                           {"alive", a.alive},
                           {"inventory", a.inventory},
                           {"visited", a.visited_count}});
  }
  return j.dump();
}

}  // namespace betr
