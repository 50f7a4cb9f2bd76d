#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace betr {

// Leaf vocabulary shared by the grammars, the tree builder and the world.
// A leaf name is `Verb` or `Verb_Entity`.
enum class Verb : std::uint8_t {
  // conditions
  NeighbourObjects,
  IsVisitedBefore,
  IsDropable,
  IsCarrying,
  AlreadyCarrying,
  IsCarryable,
  CanMove,
  DummyNode,
  // used only inside primitive-behavior subtrees
  IsInside,
  NotCarrying,
  AtEdge,
  // actions
  MoveTowards,
  MoveAway,
  Explore,
  SingleCarry,
  Drop,
  Count_
};

enum class Entity : std::uint8_t { None, Hub, Sites, Food, Debris, Obstacles, Trap, Count_ };

struct Behavior {
  Verb verb = Verb::DummyNode;
  Entity entity = Entity::None;

  bool is_action() const { return verb >= Verb::MoveTowards && verb < Verb::Count_; }
  bool is_condition() const { return verb < Verb::MoveTowards; }
  // dense index for table lookups
  std::size_t index() const {
    return static_cast<std::size_t>(verb) * static_cast<std::size_t>(Entity::Count_) +
           static_cast<std::size_t>(entity);
  }
  bool operator==(const Behavior&) const = default;
};

inline constexpr std::size_t kBehaviorSlots =
    static_cast<std::size_t>(Verb::Count_) * static_cast<std::size_t>(Entity::Count_);

std::string_view to_string(Verb v);
std::string_view to_string(Entity e);
std::string to_string(Behavior b);

/// Parses "IsCarrying_Food", "Explore", ... Returns nullopt for names outside
/// the vocabulary. Verb/entity compatibility is checked by the world.
std::optional<Behavior> parse_behavior(std::string_view name);

}  // namespace betr
