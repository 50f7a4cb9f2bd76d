#include <gtest/gtest.h>

#include <cmath>
#include <json.hpp>

#include "betr/primitives.hpp"
#include "betr/world.hpp"

using namespace betr;

namespace {

World foraging_world() {
  WorldConfig cfg;
  World w(cfg, Task::Foraging);
  w.add_site(Disc{30, 0, 10});
  return w;
}

TickStatus step(World& w, int agent, const char* action, Rng& rng, TickTrace& trace) {
  w.agent(agent).moved_this_tick = false;
  return execute_action(action, agent, w, rng, trace);
}

}  // namespace

TEST(InitWorld, ForagingLayout) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto w = init_world(WorldConfig{}, Task::Foraging, rng);
    ASSERT_EQ(w.sites().size(), 1u);
    const auto& s = w.sites()[0];
    EXPECT_NEAR(std::hypot(s.x, s.y), 30.0, 0.5);
    EXPECT_EQ(w.objects().size(), 100u);
    EXPECT_EQ(w.agents().size(), 100u);
    for (const auto& o : w.objects()) {
      EXPECT_EQ(o.kind, Entity::Food);
      EXPECT_LE(std::hypot(o.position.x - s.x, o.position.y - s.y), 10.0 + 1e-9);
    }
    for (const auto& a : w.agents()) EXPECT_LE(std::hypot(a.position.x, a.position.y), 10.0 + 1e-9);
    EXPECT_EQ(task_performance(w), 0.0);
  }
}

TEST(InitWorld, NestLayoutAndCounts) {
  Rng rng(4);
  const auto w = init_world(WorldConfig{}, Task::NestMaintenance, rng);
  for (const auto& o : w.objects()) {
    EXPECT_EQ(o.kind, Entity::Debris);
    EXPECT_LE(std::hypot(o.position.x, o.position.y), 10.0 + 1e-9);
  }
  EXPECT_EQ(task_performance(w), 0.0);

  WorldConfig one;
  one.object_count = 1;
  Rng r2(1);
  EXPECT_EQ(init_world(one, Task::Foraging, r2).objects().size(), 1u);
}

TEST(InitWorld, RejectsOverlapAndIsDeterministic) {
  WorldConfig bad;
  bad.site_distance = 15;
  Rng rng(1);
  EXPECT_THROW(init_world(bad, Task::Foraging, rng), std::invalid_argument);
  Rng a(77), b(77);
  EXPECT_EQ(snapshot_json(init_world(WorldConfig{}, Task::Foraging, a)),
            snapshot_json(init_world(WorldConfig{}, Task::Foraging, b)));
}

TEST(Conditions, Basics) {
  auto w = foraging_world();
  const int a = w.add_agent({0, 0});
  EXPECT_FALSE(eval_condition("IsCarrying_Food", a, w));
  EXPECT_TRUE(eval_condition("NeighbourObjects_Hub", a, w));
  EXPECT_FALSE(eval_condition("NeighbourObjects_Sites", a, w));
  EXPECT_TRUE(eval_condition("IsDropable_Hub", a, w));
  EXPECT_TRUE(eval_condition("CanMove", a, w));
  EXPECT_TRUE(eval_condition("IsVisitedBefore_Hub", a, w));
  EXPECT_FALSE(eval_condition("IsVisitedBefore_Sites", a, w));
  EXPECT_THROW(eval_condition("Frobnicate", a, w), EvaluationError);
  EXPECT_THROW(eval_condition("IsCarryable_Hub", a, w), EvaluationError);
  EXPECT_THROW(eval_condition("Explore", a, w), EvaluationError);

  w.add_object(Entity::Food, {0, 0});
  EXPECT_TRUE(eval_condition("IsCarryable_Food", a, w));
  EXPECT_TRUE(eval_condition("NeighbourObjects_Food", a, w));
  EXPECT_FALSE(eval_condition("IsCarryable_Debris", a, w));
}

TEST(Conditions, NestDropOutsideBoundary) {
  World w(WorldConfig{}, Task::NestMaintenance);
  const int in = w.add_agent({5, 0});
  const int out = w.add_agent({31, 0});
  EXPECT_FALSE(eval_condition("IsDropable_Hub", in, w));
  EXPECT_TRUE(eval_condition("IsDropable_Hub", out, w));
}

TEST(Conditions, VisitedSitesMatchesPathReplay) {
  auto w = foraging_world();
  const int a = w.add_agent({0, 0});
  Rng rng(3);
  TickTrace trace;
  bool crossed = false;
  for (int i = 0; i < 40; ++i) {
    step(w, a, "MoveTowards_Sites", rng, trace);
    const auto p = w.agent(a).position;
    crossed = crossed || std::hypot(p.x - 30.0, p.y) <= 10.0;
    ASSERT_EQ(eval_condition("IsVisitedBefore_Sites", a, w), crossed) << "step " << i;
  }
  EXPECT_TRUE(crossed);
}

TEST(Actions, ExploreMovesWithinSpeed) {
  auto w = foraging_world();
  const int a = w.add_agent({0, 0});
  Rng rng(8);
  TickTrace trace;
  for (int i = 0; i < 200; ++i) {
    const auto before = w.agent(a).position;
    const auto visited = w.agent(a).visited_count;
    EXPECT_EQ(step(w, a, "Explore", rng, trace), TickStatus::Success);
    const auto after = w.agent(a).position;
    EXPECT_LE(std::hypot(after.x - before.x, after.y - before.y), 2.0 + 1e-9);
    EXPECT_GE(w.agent(a).visited_count, visited);
    EXPECT_LE(w.agent(a).visited_count, visited + 1);
  }
}

TEST(Actions, OneMovePerTick) {
  auto w = foraging_world();
  const int a = w.add_agent({0, 0});
  Rng rng(1);
  TickTrace trace;
  EXPECT_EQ(step(w, a, "MoveTowards_Sites", rng, trace), TickStatus::Success);
  EXPECT_EQ(execute_action("Explore", a, w, rng, trace), TickStatus::Running);
  EXPECT_EQ(w.agent(a).position, (Cell{2, 0}));
}

TEST(Actions, CarryAndDrop) {
  auto w = foraging_world();
  const int a = w.add_agent({3, 3});
  w.add_object(Entity::Food, {3, 3});
  w.add_object(Entity::Food, {3, 3});
  Rng rng(1);
  TickTrace trace;
  EXPECT_EQ(step(w, a, "Drop_Food", rng, trace), TickStatus::Failure);
  EXPECT_EQ(step(w, a, "SingleCarry_Food", rng, trace), TickStatus::Success);
  EXPECT_EQ(w.agent(a).inventory.size(), 1u);
  EXPECT_EQ(trace.pickups, 1);
  EXPECT_EQ(step(w, a, "SingleCarry_Food", rng, trace), TickStatus::Failure);  // capacity one
  EXPECT_EQ(step(w, a, "SingleCarry_Debris", rng, trace), TickStatus::Failure);
  EXPECT_EQ(step(w, a, "Drop_Food", rng, trace), TickStatus::Success);
  EXPECT_EQ(trace.goal_drops, 1);  // (3,3) is inside the hub
  EXPECT_TRUE(w.agent(a).inventory.empty());
  EXPECT_THROW(step(w, a, "CanMove", rng, trace), EvaluationError);
}

TEST(Actions, BugFollowingSidestepsObstacle) {
  WorldConfig cfg;
  cfg.obstacles.push_back(Disc{5, 0, 2});
  World w(cfg, Task::Foraging);
  w.add_site(Disc{30, 0, 10});
  const int a = w.add_agent({2, 0});
  Rng rng(1);
  TickTrace trace;
  EXPECT_EQ(step(w, a, "MoveTowards_Sites", rng, trace), TickStatus::Success);
  const auto p = w.agent(a).position;
  EXPECT_EQ(p.x, 2);
  EXPECT_EQ(std::abs(p.y), 1);
  // keep walking: the agent gets around and never enters the obstacle
  for (int i = 0; i < 30; ++i) {
    step(w, a, "MoveTowards_Sites", rng, trace);
    ASSERT_FALSE(w.is_obstacle(w.agent(a).position));
  }
  EXPECT_GT(w.agent(a).position.x, 7);
}

TEST(Actions, TrapKillsAndFreezes) {
  WorldConfig cfg;
  cfg.traps.push_back(Disc{-20, -20, 2});
  World w(cfg, Task::Foraging);
  w.add_site(Disc{30, 0, 10});
  const int a = w.add_agent({-16, -20});
  ASSERT_TRUE(w.agent(a).alive);
  w.relocate(w.agent(a), {-19, -20}, nullptr);
  EXPECT_FALSE(w.agent(a).alive);
  Rng rng(1);
  TickTrace trace;
  EXPECT_EQ(step(w, a, "Explore", rng, trace), TickStatus::Failure);
  EXPECT_EQ(w.agent(a).position, (Cell{-19, -20}));
  EXPECT_FALSE(eval_condition("CanMove", a, w));
}

TEST(Performance, Fractions) {
  auto w = foraging_world();
  for (int i = 0; i < 85; ++i) w.add_object(Entity::Food, {0, 0});
  for (int i = 0; i < 15; ++i) w.add_object(Entity::Food, {30, 0});
  EXPECT_DOUBLE_EQ(task_performance(w), 0.85);

  World nest(WorldConfig{}, Task::NestMaintenance);
  nest.add_object(Entity::Debris, {40, 0});
  nest.add_object(Entity::Debris, {0, 0});
  EXPECT_DOUBLE_EQ(task_performance(nest), 0.5);
}

TEST(Primitives, CarryFoodPpaWithWorldLeaves) {
  const auto tree = make_ppa({"AlreadyCarrying_Food"}, {"IsCarryable_Food"}, {}, "SingleCarry_Food");
  auto w = foraging_world();
  const int a = w.add_agent({1, 1});
  w.add_object(Entity::Food, {1, 1});
  w.add_object(Entity::Food, {1, 1});
  Rng rng(1);
  WorldEnv env{w, a, rng};
  auto [s1, t1] = tick(tree, env);
  EXPECT_EQ(s1, TickStatus::Success);
  EXPECT_EQ(t1.pickups, 1);
  // already carrying: postcondition holds, the action does not run
  auto [s2, t2] = tick(tree, env);
  EXPECT_EQ(s2, TickStatus::Success);
  EXPECT_EQ(t2.pickups, 0);
  EXPECT_EQ(t2.postcondition_successes, 1);
  EXPECT_EQ(w.agent(a).inventory.size(), 1u);
}

TEST(Primitives, StylesDifferOnSatisfiedGoal) {
  const auto tree = build_tree("[Sequence][Act]MoveTowards_Hub[/Act][/Sequence]");
  for (auto style : {PrimitiveStyle::Ppa, PrimitiveStyle::Nominal}) {
    auto w = foraging_world();
    const int a = w.add_agent({3, 0});
    Rng rng(1);
    tick_agent(tree, a, w, rng, primitive_library(style));
    const auto p = w.agent(a).position;
    if (style == PrimitiveStyle::Ppa)
      EXPECT_EQ(p, (Cell{3, 0}));  // already inside the hub
    else
      EXPECT_EQ(p, (Cell{1, 0}));
  }
}

TEST(QuantizeStep, NearestIntegerStep) {
  EXPECT_EQ(quantize_step(2, 0, 2), (Cell{2, 0}));
  EXPECT_EQ(quantize_step(1.5, 1.5, 2), (Cell{1, 1}));
  EXPECT_EQ(quantize_step(0.2, -0.1, 2), (Cell{0, 0}));
  EXPECT_EQ(quantize_step(0, -5, 2), (Cell{0, -2}));
}

// random primitive activity keeps the world invariants
TEST(WorldProperty, InvariantsUnderRandomActivity) {
  WorldConfig cfg;
  cfg.object_count = 30;
  cfg.obstacles.push_back(Disc{-15, 15, 3});
  cfg.traps.push_back(Disc{15, -15, 2});
  for (auto task : {Task::Foraging, Task::NestMaintenance}) {
    Rng rng(12);
    auto w = init_world(cfg, task, rng);
    const char* actions[] = {"Explore", "MoveTowards_Hub", "MoveAway_Hub", "MoveTowards_Sites", "MoveAway_Sites",
                             "SingleCarry_Food", "SingleCarry_Debris", "Drop_Food", "Drop_Debris"};
    std::vector<std::size_t> visited(w.agents().size());
    std::vector<bool> dead(w.agents().size());
    for (int t = 0; t < 400; ++t) {
      for (int a = 0; a < static_cast<int>(w.agents().size()); ++a) {
        const auto before = w.agent(a).position;
        TickTrace trace;
        const char* act = actions[rng.below(std::size(actions))];
        if (task == Task::NestMaintenance && std::string_view(act).find("Sites") != std::string_view::npos) act = "Explore";
        step(w, a, act, rng, trace);
        const auto& body = w.agent(a);
        const auto after = body.position;
        ASSERT_LE(std::hypot(after.x - before.x, after.y - before.y), 2.0 + 1e-9);
        ASSERT_LE(body.inventory.size(), cfg.carry_capacity);
        ASSERT_GE(body.visited_count, visited[static_cast<std::size_t>(a)]);
        visited[static_cast<std::size_t>(a)] = body.visited_count;
        if (dead[static_cast<std::size_t>(a)]) {
          ASSERT_FALSE(body.alive);
          ASSERT_EQ(after, before);
        }
        dead[static_cast<std::size_t>(a)] = !body.alive;
      }
      std::size_t carried = 0;
      for (const auto& o : w.objects()) {
        if (!o.carried_by) continue;
        ++carried;
        const auto& inv = w.agent(*o.carried_by).inventory;
        ASSERT_NE(std::find(inv.begin(), inv.end(), o.id), inv.end());
      }
      std::size_t held = 0;
      for (const auto& a : w.agents()) held += a.inventory.size();
      ASSERT_EQ(carried, held);
      ASSERT_EQ(w.objects().size(), 30u);
      const double p = task_performance(w);
      ASSERT_GE(p, 0.0);
      ASSERT_LE(p, 1.0);
    }
  }
}

TEST(Snapshot, JsonShape) {
  Rng rng(2);
  const auto w = init_world(WorldConfig{}, Task::Foraging, rng);
  const auto j = nlohmann::json::parse(snapshot_json(w));
  EXPECT_EQ(j.at("step"), 0);
  EXPECT_EQ(j.at("agents").size(), 100u);
  EXPECT_EQ(j.at("objects").size(), 100u);
}
