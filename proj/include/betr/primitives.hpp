#pragma once

#include <array>
#include <optional>
#include <string_view>

#include "betr/btree.hpp"
#include "betr/world.hpp"

namespace betr {

// How an action leaf of an evolved tree is carried out.
//   Nominal: Sequence(precondition, action)
//   Ppa:     Selector(postcondition, Sequence(precondition, action))
enum class PrimitiveStyle { Nominal, Ppa };

std::string_view to_string(PrimitiveStyle s);

/// The composite subtree behind every action name, for one style.
class PrimitiveLibrary {
 public:
  explicit PrimitiveLibrary(PrimitiveStyle style);

  PrimitiveStyle style() const { return style_; }
  /// nullptr when the action is not in the vocabulary.
  const BTNode* composite(Behavior action) const;

 private:
  PrimitiveStyle style_;
  std::array<std::optional<BTNode>, kBehaviorSlots> table_{};
};

const PrimitiveLibrary& primitive_library(PrimitiveStyle style);

/// Leaf evaluator for raw world predicates and primitive steps.
struct WorldEnv {
  World& world;
  int agent;
  Rng& rng;

  bool check(const BTNode& node, TickTrace&) const;
  TickStatus act(const BTNode& node, TickTrace& trace);
};

/// Leaf evaluator for evolved trees: conditions read the world, actions run
/// their primitive composite (whose internal nodes also feed the trace).
struct AgentEnv {
  World& world;
  int agent;
  Rng& rng;
  const PrimitiveLibrary& primitives;

  bool check(const BTNode& node, TickTrace&) const;
  TickStatus act(const BTNode& node, TickTrace& trace);
};

/// Ticks `tree` once for `agent`, resetting its per-tick motion budget.
std::pair<TickStatus, TickTrace> tick_agent(const BTNode& tree, int agent, World& world, Rng& rng,
                                            const PrimitiveLibrary& primitives);

}  // namespace betr
