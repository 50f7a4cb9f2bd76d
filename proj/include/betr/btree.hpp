#pragma once

#include <concepts>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "betr/behavior.hpp"
#include "betr/rng.hpp"

namespace betr {

enum class NodeKind { Selector, Sequence, Parallel, Condition, Action };
enum class TagRole { None, PostCnd, PreCnd, Cnstr, Act };
enum class TickStatus { Success, Failure, Running };

// SuccessOnOne: Success once any child succeeds, Failure only if all fail.
// SuccessOnAll: Failure once any child fails, Success only if all succeed.
enum class ParallelPolicy { SuccessOnOne, SuccessOnAll };

std::string_view to_string(TickStatus s);

/// Per-tick event counts feeding the BT-feedback and prospective fitness.
struct TickTrace {
  int postcondition_successes = 0;
  int constraint_failures = 0;
  int root_selector_successes = 0;
  int actions_executed = 0;  // pickups + drops + carry steps
  int pickups = 0;
  int drops = 0;
  int goal_drops = 0;  // drops that advance the task
  int carry_steps = 0;

  void record_pickup() { ++pickups, ++actions_executed; }
  void record_drop(bool goal) { ++drops, ++actions_executed, goal_drops += goal ? 1 : 0; }
  void record_carry_step() { ++carry_steps, ++actions_executed; }
  bool operator==(const TickTrace&) const = default;
};

struct BTNode {
  NodeKind kind = NodeKind::Sequence;
  TagRole role = TagRole::None;
  std::string name;
  std::vector<BTNode> children;
  ParallelPolicy policy = ParallelPolicy::SuccessOnOne;
  std::optional<Behavior> behavior;  // resolved leaf name; empty if unknown

  static BTNode condition(std::string name, TagRole role);
  static BTNode action(std::string name);
  static BTNode control(NodeKind kind, std::vector<BTNode> children);

  bool is_leaf() const { return kind == NodeKind::Condition || kind == NodeKind::Action; }
  bool is_dummy() const { return behavior && behavior->verb == Verb::DummyNode; }

  // Structural equality; ignores the cached behavior.
  bool operator==(const BTNode& o) const {
    return kind == o.kind && role == o.role && name == o.name && policy == o.policy && children == o.children;
  }
};

class MalformedExpression : public std::runtime_error {
 public:
  MalformedExpression(const std::string& what, std::size_t position)
      : std::runtime_error(what + " at offset " + std::to_string(position)), position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

/// Raised when a leaf names a condition or action the evaluator does not know.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Deserializes a tag expression such as
/// `[Selector][PostCnd]DummyNode[/PostCnd][Sequence][Act]Explore[/Act][/Sequence][/Selector]`.
BTNode build_tree(std::string_view expr);
std::string serialize(const BTNode& node);

/// Selector(postcondition branch, Sequence(preconditions..., constraints..., action)).
/// Several postconditions are conjoined under a Sequence; none becomes DummyNode.
BTNode make_ppa(const std::vector<std::string>& postconditions, const std::vector<std::string>& preconditions,
                const std::vector<std::string>& constraints, const std::string& action);

bool is_ppa(const BTNode& node);
std::size_t count_ppa_subtrees(const BTNode& root);

/// Distinct behavior leaf names, DummyNode excluded.
std::size_t unique_behavior_nodes(const BTNode& root);

/// Parallel (SuccessOnOne) root over the trees in an rng-shuffled order.
BTNode blend_agents(std::vector<BTNode> trees, Rng& rng);

std::size_t tree_size(const BTNode& root);

/// Indented rendering with PPA subtrees marked.
std::string pretty_print(const BTNode& root);

// ---------------------------------------------------------------------------
// Tick engine

template <class Env>
concept LeafEnvironment = requires(Env& env, const BTNode& node, TickTrace& trace) {
  { env.check(node, trace) } -> std::convertible_to<bool>;
  { env.act(node, trace) } -> std::same_as<TickStatus>;
};

template <LeafEnvironment Env>
TickStatus tick_node(const BTNode& node, Env& env, TickTrace& trace) {
  switch (node.kind) {
    case NodeKind::Selector:
      for (const auto& child : node.children) {
        const auto s = tick_node(child, env, trace);
        if (s != TickStatus::Failure) return s;
      }
      return TickStatus::Failure;
    case NodeKind::Sequence:
      for (const auto& child : node.children) {
        const auto s = tick_node(child, env, trace);
        if (s != TickStatus::Success) return s;
      }
      return TickStatus::Success;
    case NodeKind::Parallel: {
      std::size_t ok = 0, failed = 0;
      for (const auto& child : node.children) {
        const auto s = tick_node(child, env, trace);
        ok += s == TickStatus::Success;
        failed += s == TickStatus::Failure;
      }
      const auto n = node.children.size();
      if (node.policy == ParallelPolicy::SuccessOnOne) {
        if (ok > 0) return TickStatus::Success;
        return failed == n ? TickStatus::Failure : TickStatus::Running;
      }
      if (failed > 0) return TickStatus::Failure;
      return ok == n ? TickStatus::Success : TickStatus::Running;
    }
    case NodeKind::Condition: {
      const bool holds = node.is_dummy() || static_cast<bool>(env.check(node, trace));
      if (node.role == TagRole::PostCnd && holds) ++trace.postcondition_successes;
      if (node.role == TagRole::Cnstr && !holds) ++trace.constraint_failures;
      return holds ? TickStatus::Success : TickStatus::Failure;
    }
    case NodeKind::Action:
      return env.act(node, trace);
  }
  return TickStatus::Failure;
}

/// One tick from the root. A Selector root that succeeds adds one
/// root_selector_success.
template <LeafEnvironment Env>
std::pair<TickStatus, TickTrace> tick(const BTNode& root, Env& env) {
  TickTrace trace;
  const auto status = tick_node(root, env, trace);
  if (root.kind == NodeKind::Selector && status == TickStatus::Success) trace.root_selector_successes = 1;
  return {status, trace};
}

}  // namespace betr
