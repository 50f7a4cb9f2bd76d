#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "betr/btree.hpp"

using namespace betr;

namespace {

constexpr const char* kCarryFood =
    "[Selector][PostCnd]AlreadyCarrying_Food[/PostCnd][Sequence][PreCnd]IsCarryable_Food[/PreCnd]"
    "[Act]SingleCarry_Food[/Act][/Sequence][/Selector]";

// Leaves answer from tables; every evaluation is logged.
struct StubEnv {
  std::map<std::string, bool> conditions;
  std::map<std::string, TickStatus> actions;
  std::vector<std::string> log;

  bool check(const BTNode& n, TickTrace&) {
    log.push_back(n.name);
    return conditions.at(n.name);
  }
  TickStatus act(const BTNode& n, TickTrace&) {
    log.push_back(n.name);
    return actions.at(n.name);
  }
  bool evaluated(const std::string& name) const { return std::find(log.begin(), log.end(), name) != log.end(); }
};

BTNode leaf(const std::string& name) { return BTNode::action(name); }

}  // namespace

TEST(BuildTree, DirectNesting) {
  const auto t = build_tree("[Selector][PostCnd]DummyNode[/PostCnd][Sequence][Act]Explore[/Act][/Sequence][/Selector]");
  ASSERT_EQ(t.kind, NodeKind::Selector);
  ASSERT_EQ(t.children.size(), 2u);
  EXPECT_EQ(t.children[0].kind, NodeKind::Condition);
  EXPECT_EQ(t.children[0].role, TagRole::PostCnd);
  EXPECT_EQ(t.children[0].name, "DummyNode");
  ASSERT_EQ(t.children[1].kind, NodeKind::Sequence);
  EXPECT_EQ(t.children[1].children.at(0).kind, NodeKind::Action);
  EXPECT_EQ(t.children[1].children.at(0).name, "Explore");
}

TEST(BuildTree, CarryFoodPpaShape) {
  const auto t = build_tree(kCarryFood);
  EXPECT_EQ(t, make_ppa({"AlreadyCarrying_Food"}, {"IsCarryable_Food"}, {}, "SingleCarry_Food"));
  EXPECT_EQ(t.children[0].name, "AlreadyCarrying_Food");
  EXPECT_EQ(t.children[1].children[0].name, "IsCarryable_Food");
  EXPECT_EQ(t.children[1].children[1].name, "SingleCarry_Food");
}

TEST(BuildTree, MalformedExpressions) {
  EXPECT_THROW(build_tree("[Sequence][Act]x[/Act]"), MalformedExpression);
  EXPECT_THROW(build_tree("[Sequence][/Sequence]"), MalformedExpression);
  EXPECT_THROW(build_tree("[Loop][Act]x[/Act][/Loop]"), MalformedExpression);
  EXPECT_THROW(build_tree("[Sequence][Act]x[/PreCnd][/Sequence]"), MalformedExpression);
  EXPECT_THROW(build_tree("[Act]x[/Act]junk"), MalformedExpression);
  try {
    build_tree("[Sequence][Act]x[/Act]");
  } catch (const MalformedExpression& e) {
    EXPECT_EQ(e.position(), 22u);
  }
}

TEST(BuildTree, SerializeRoundTrip) {
  for (const char* text :
       {kCarryFood, "[Sequence][Selector][PostCnd]DummyNode[/PostCnd][Sequence][Cnstr]CanMove[/Cnstr][Act]Explore[/Act]"
                "[/Sequence][/Selector][Selector][Sequence][PostCnd]IsCarrying_Food[/PostCnd][PostCnd]IsDropable_Hub"
                "[/PostCnd][/Sequence][Sequence][PreCnd]IsCarrying_Food[/PreCnd][Act]Drop_Food[/Act][/Sequence]"
                "[/Selector][/Sequence]",
        "[Parallel][Act]Explore[/Act][ParallelAll][Act]Explore[/Act][/ParallelAll][/Parallel]"}) {
    const auto t = build_tree(text);
    EXPECT_EQ(serialize(t), text);
    EXPECT_EQ(build_tree(serialize(t)), t);
  }
}

TEST(MakePpa, CanonicalOrderingAndDummy) {
  const auto degenerate = make_ppa({}, {}, {}, "Explore");
  EXPECT_EQ(serialize(degenerate),
            "[Selector][PostCnd]DummyNode[/PostCnd][Sequence][Act]Explore[/Act][/Sequence][/Selector]");
  const auto full = make_ppa({"P"}, {"Q"}, {"C"}, "A");
  ASSERT_EQ(full.children[1].children.size(), 3u);
  EXPECT_EQ(full.children[1].children[0].role, TagRole::PreCnd);
  EXPECT_EQ(full.children[1].children[1].role, TagRole::Cnstr);
  EXPECT_EQ(full.children[1].children[2].role, TagRole::Act);
  EXPECT_THROW(make_ppa({}, {}, {}, ""), std::invalid_argument);
}

TEST(CountPpa, Examples) {
  const auto fig = build_tree(kCarryFood);
  EXPECT_EQ(count_ppa_subtrees(fig), 1u);
  EXPECT_EQ(count_ppa_subtrees(make_ppa({}, {}, {}, "Explore")), 1u);
  EXPECT_EQ(count_ppa_subtrees(BTNode::control(NodeKind::Sequence, {fig, fig})), 2u);
  EXPECT_EQ(count_ppa_subtrees(BTNode::control(NodeKind::Sequence, {leaf("Explore")})), 0u);
}

TEST(UniqueBehaviors, SetSemantics) {
  const auto t = BTNode::control(NodeKind::Sequence, {leaf("Explore"), leaf("Explore"), leaf("MoveTowards_Sites")});
  EXPECT_EQ(unique_behavior_nodes(t), 2u);
  EXPECT_EQ(unique_behavior_nodes(BTNode::control(NodeKind::Sequence, {leaf("Explore")})), 1u);
  EXPECT_EQ(unique_behavior_nodes(build_tree(kCarryFood)), 3u);
  EXPECT_EQ(unique_behavior_nodes(make_ppa({}, {}, {}, "Explore")), 1u);  // DummyNode not counted
}

TEST(Blend, ShapeAndDeterminism) {
  const auto a = make_ppa({}, {}, {}, "Explore");
  const auto b = build_tree(kCarryFood);
  const auto c = make_ppa({"IsCarrying_Food"}, {"IsCarrying_Food"}, {}, "Drop_Food");
  Rng r0(3);
  const auto single = blend_agents({a}, r0);
  EXPECT_EQ(single.kind, NodeKind::Parallel);
  EXPECT_EQ(single.policy, ParallelPolicy::SuccessOnOne);
  ASSERT_EQ(single.children.size(), 1u);

  Rng r1(11), r2(11);
  const auto x = blend_agents({a, b, c}, r1);
  const auto y = blend_agents({a, b, c}, r2);
  EXPECT_EQ(x, y);
  EXPECT_TRUE(std::is_permutation(x.children.begin(), x.children.end(), std::vector<BTNode>{a, b, c}.begin()));

  std::vector<BTNode> fifty(50, b);
  EXPECT_EQ(blend_agents(fifty, r1).children.size(), 50u);
  EXPECT_THROW(blend_agents({}, r1), std::invalid_argument);
}

TEST(Blend, CountsInvariantUnderParallelPermutation) {
  const auto a = make_ppa({}, {}, {}, "Explore");
  const auto b = build_tree(kCarryFood);
  const auto c = BTNode::control(NodeKind::Sequence, {b, make_ppa({"IsDropable_Hub"}, {}, {"CanMove"}, "Drop_Food")});
  std::vector<BTNode> kids{a, b, c};
  std::sort(kids.begin(), kids.end(), [](const BTNode& l, const BTNode& r) { return serialize(l) < serialize(r); });
  const auto base = BTNode::control(NodeKind::Parallel, kids);
  do {
    const auto t = BTNode::control(NodeKind::Parallel, kids);
    EXPECT_EQ(count_ppa_subtrees(t), count_ppa_subtrees(base));
    EXPECT_EQ(unique_behavior_nodes(t), unique_behavior_nodes(base));
  } while (std::next_permutation(kids.begin(), kids.end(),
                                 [](const BTNode& l, const BTNode& r) { return serialize(l) < serialize(r); }));
}

// Reference truth tables for control nodes over leaf statuses.
TickStatus reference(NodeKind kind, ParallelPolicy policy, const std::vector<TickStatus>& in) {
  const auto count = [&](TickStatus s) { return std::count(in.begin(), in.end(), s); };
  const auto n = static_cast<long>(in.size());
  switch (kind) {
    case NodeKind::Selector:
      for (auto s : in)
        if (s != TickStatus::Failure) return s;
      return TickStatus::Failure;
    case NodeKind::Sequence:
      for (auto s : in)
        if (s != TickStatus::Success) return s;
      return TickStatus::Success;
    default:
      if (policy == ParallelPolicy::SuccessOnOne)
        return count(TickStatus::Success) > 0   ? TickStatus::Success
               : count(TickStatus::Failure) == n ? TickStatus::Failure
                                                 : TickStatus::Running;
      return count(TickStatus::Failure) > 0   ? TickStatus::Failure
             : count(TickStatus::Success) == n ? TickStatus::Success
                                               : TickStatus::Running;
  }
}

TEST(TickAlgebra, ExhaustiveTwoLevelTrees) {
  const TickStatus all[] = {TickStatus::Success, TickStatus::Failure, TickStatus::Running};
  const std::pair<NodeKind, ParallelPolicy> kinds[] = {{NodeKind::Selector, ParallelPolicy::SuccessOnOne},
                                                       {NodeKind::Sequence, ParallelPolicy::SuccessOnOne},
                                                       {NodeKind::Parallel, ParallelPolicy::SuccessOnOne},
                                                       {NodeKind::Parallel, ParallelPolicy::SuccessOnAll}};
  std::size_t cases = 0;
  for (const auto& [outer, outer_policy] : kinds)
    for (const auto& [inner, inner_policy] : kinds)
      // outer has three children: leaf a, control(inner){leaf b, leaf c}, leaf d
      for (int code = 0; code < 81; ++code) {
        std::vector<TickStatus> s(4);
        for (int k = 0, c = code; k < 4; ++k, c /= 3) s[static_cast<std::size_t>(k)] = all[c % 3];
        StubEnv env;
        const char* names[] = {"a", "b", "c", "d"};
        for (int k = 0; k < 4; ++k) env.actions[names[k]] = s[static_cast<std::size_t>(k)];
        auto mid = BTNode::control(inner, {leaf("b"), leaf("c")});
        mid.policy = inner_policy;
        auto root = BTNode::control(outer, {leaf("a"), mid, leaf("d")});
        root.policy = outer_policy;
        const auto mid_status = reference(inner, inner_policy, {s[1], s[2]});
        const auto expected = reference(outer, outer_policy, {s[0], mid_status, s[3]});
        const auto [got, trace] = tick(root, env);
        ASSERT_EQ(got, expected) << "case " << code;
        ++cases;
      }
  EXPECT_EQ(cases, 16u * 81u);
}

TEST(TickAlgebra, ShortCircuitEvaluation) {
  StubEnv env;
  env.actions = {{"a", TickStatus::Success}, {"b", TickStatus::Success}};
  tick(BTNode::control(NodeKind::Selector, {leaf("a"), leaf("b")}), env);
  EXPECT_EQ(env.log, std::vector<std::string>{"a"});
  env.log.clear();
  env.actions["a"] = TickStatus::Running;
  tick(BTNode::control(NodeKind::Sequence, {leaf("a"), leaf("b")}), env);
  EXPECT_EQ(env.log, std::vector<std::string>{"a"});
  env.log.clear();
  env.actions["a"] = TickStatus::Failure;
  tick(BTNode::control(NodeKind::Parallel, {leaf("a"), leaf("b")}), env);
  EXPECT_EQ(env.log.size(), 2u);
}

TEST(TickTraceCounts, FeedbackEvents) {
  StubEnv env;
  env.conditions = {{"P", false}, {"Q", true}, {"C", false}};
  env.actions = {{"A", TickStatus::Success}};
  const auto failing = make_ppa({"P"}, {"Q"}, {"C"}, "A");
  auto [s1, t1] = tick(failing, env);
  EXPECT_EQ(s1, TickStatus::Failure);
  EXPECT_EQ(t1.constraint_failures, 1);
  EXPECT_EQ(t1.postcondition_successes, 0);
  EXPECT_EQ(t1.root_selector_successes, 0);
  EXPECT_FALSE(env.evaluated("A"));

  env.log.clear();
  env.conditions["P"] = true;
  auto [s2, t2] = tick(failing, env);
  EXPECT_EQ(s2, TickStatus::Success);
  EXPECT_EQ(t2.postcondition_successes, 1);
  EXPECT_EQ(t2.root_selector_successes, 1);
  EXPECT_EQ(env.log, std::vector<std::string>{"P"});

  // the dummy postcondition always holds and never reaches the environment
  env.log.clear();
  auto [s3, t3] = tick(make_ppa({}, {}, {}, "A"), env);
  EXPECT_EQ(s3, TickStatus::Success);
  EXPECT_EQ(t3.postcondition_successes, 1);
  EXPECT_TRUE(env.log.empty());
}

// randomized PPAs: a holding postcondition always short-circuits the action
TEST(PpaProperty, PostconditionShortCircuit) {
  Rng rng(99);
  for (int i = 0; i < 1000; ++i) {
    StubEnv env;
    auto names = [&](const char* prefix, std::size_t max) {
      std::vector<std::string> out(rng.below(max + 1));
      for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = prefix + std::to_string(k);
        env.conditions[out[k]] = rng.bernoulli(0.6);
      }
      return out;
    };
    const auto post = names("post", 3), pre = names("pre", 3), cnstr = names("cnstr", 2);
    const TickStatus statuses[] = {TickStatus::Success, TickStatus::Failure, TickStatus::Running};
    env.actions["act"] = statuses[rng.below(3)];
    const auto tree = make_ppa(post, pre, cnstr, "act");
    ASSERT_EQ(count_ppa_subtrees(tree), 1u);

    const auto holds = [&](const std::vector<std::string>& v) {
      return std::all_of(v.begin(), v.end(), [&](const auto& n) { return env.conditions.at(n); });
    };
    const bool goal = holds(post);
    const bool guarded = holds(pre) && holds(cnstr);
    const auto [status, trace] = tick(tree, env);
    if (goal) {
      ASSERT_FALSE(env.evaluated("act"));
      ASSERT_EQ(status, TickStatus::Success);
    } else {
      ASSERT_EQ(env.evaluated("act"), guarded);
      ASSERT_EQ(status, guarded ? env.actions["act"] : TickStatus::Failure);
    }
  }
}
