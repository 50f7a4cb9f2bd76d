#include "betr/behavior.hpp"

#include <array>

namespace betr {

namespace {

constexpr std::array<std::string_view, static_cast<std::size_t>(Verb::Count_)> kVerbNames = {
    "NeighbourObjects", "IsVisitedBefore", "IsDropable", "IsCarrying", "AlreadyCarrying", "IsCarryable",
    "CanMove",          "DummyNode",       "IsInside",   "NotCarrying", "AtEdge",         "MoveTowards",
    "MoveAway",         "Explore",         "SingleCarry", "Drop"};

constexpr std::array<std::string_view, static_cast<std::size_t>(Entity::Count_)> kEntityNames = {
    "", "Hub", "Sites", "Food", "Debris", "Obstacles", "Trap"};

}  // namespace

std::string_view to_string(Verb v) { return kVerbNames[static_cast<std::size_t>(v)]; }
std::string_view to_string(Entity e) { return kEntityNames[static_cast<std::size_t>(e)]; }

std::string to_string(Behavior b) {
  std::string s(to_string(b.verb));
  if (b.entity != Entity::None) {
    s += '_';
    s += to_string(b.entity);
  }
  return s;
}

std::optional<Behavior> parse_behavior(std::string_view name) {
  std::string_view verb_part = name;
  std::string_view entity_part;
  if (const auto us = name.find('_'); us != std::string_view::npos) {
    verb_part = name.substr(0, us);
    entity_part = name.substr(us + 1);
    if (entity_part.empty()) return std::nullopt;
  }
  Behavior b;
  bool found = false;
  for (std::size_t i = 0; i < kVerbNames.size(); ++i) {
    if (kVerbNames[i] == verb_part) {
      b.verb = static_cast<Verb>(i);
      found = true;
      break;
    }
  }
  if (!found) return std::nullopt;
  if (entity_part.empty()) return b;
  for (std::size_t i = 1; i < kEntityNames.size(); ++i) {
    if (kEntityNames[i] == entity_part) {
      b.entity = static_cast<Entity>(i);
      return b;
    }
  }
  return std::nullopt;
}

}  // namespace betr
