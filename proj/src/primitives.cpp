#include "betr/primitives.hpp"

namespace betr {

std::string_view to_string(PrimitiveStyle s) { return s == PrimitiveStyle::Ppa ? "ppa" : "nominal"; }

namespace {

BTNode sequence(std::vector<BTNode> children) { return BTNode::control(NodeKind::Sequence, std::move(children)); }

BTNode pre(const std::string& name) { return BTNode::condition(name, TagRole::PreCnd); }

BTNode build_composite(PrimitiveStyle style, Behavior b) {
  const std::string name = to_string(b);
  const std::string object(to_string(b.entity));
  switch (b.verb) {
    case Verb::MoveTowards:
      if (style == PrimitiveStyle::Nominal) return sequence({pre("CanMove"), BTNode::action(name)});
      return make_ppa({"IsInside_" + object}, {"CanMove"}, {}, name);
    case Verb::MoveAway:
      if (style == PrimitiveStyle::Nominal) return sequence({pre("CanMove"), BTNode::action(name)});
      return make_ppa({"AtEdge"}, {"CanMove"}, {}, name);
    case Verb::Explore:
      return sequence({pre("CanMove"), BTNode::action(name)});
    case Verb::SingleCarry:
      if (style == PrimitiveStyle::Nominal) return sequence({pre("IsCarryable_" + object), BTNode::action(name)});
      return make_ppa({"AlreadyCarrying_" + object}, {"IsCarryable_" + object}, {}, name);
    case Verb::Drop:
      if (style == PrimitiveStyle::Nominal) return sequence({pre("IsCarrying_" + object), BTNode::action(name)});
      return make_ppa({"NotCarrying_" + object}, {"IsCarrying_" + object}, {}, name);
    default:
      throw std::logic_error("not an action");
  }
}

}  // namespace

PrimitiveLibrary::PrimitiveLibrary(PrimitiveStyle style) : style_(style) {
  const Entity sites[] = {Entity::Hub, Entity::Sites};
  const Entity movables[] = {Entity::Food, Entity::Debris};
  const auto put = [&](Behavior b) { table_[b.index()] = build_composite(style, b); };
  for (auto e : sites) {
    put({Verb::MoveTowards, e});
    put({Verb::MoveAway, e});
  }
  for (auto e : movables) {
    put({Verb::SingleCarry, e});
    put({Verb::Drop, e});
  }
  put({Verb::Explore, Entity::None});
}

const BTNode* PrimitiveLibrary::composite(Behavior action) const {
  const auto& slot = table_[action.index()];
  return slot ? &*slot : nullptr;
}

const PrimitiveLibrary& primitive_library(PrimitiveStyle style) {
  static const PrimitiveLibrary nominal(PrimitiveStyle::Nominal);
  static const PrimitiveLibrary ppa(PrimitiveStyle::Ppa);
  return style == PrimitiveStyle::Ppa ? ppa : nominal;
}

bool WorldEnv::check(const BTNode& node, TickTrace&) const {
  if (!node.behavior || !node.behavior->is_condition())
    throw EvaluationError("unknown condition '" + node.name + "'");
  return eval_condition(*node.behavior, agent, world);
}

TickStatus WorldEnv::act(const BTNode& node, TickTrace& trace) {
  if (!node.behavior || !node.behavior->is_action()) throw EvaluationError("unknown action '" + node.name + "'");
  return execute_action(*node.behavior, agent, world, rng, trace);
}

bool AgentEnv::check(const BTNode& node, TickTrace& trace) const {
  return WorldEnv{world, agent, rng}.check(node, trace);
}

TickStatus AgentEnv::act(const BTNode& node, TickTrace& trace) {
  const BTNode* composite = node.behavior ? primitives.composite(*node.behavior) : nullptr;
  if (!composite) throw EvaluationError("unknown action '" + node.name + "'");
  WorldEnv raw{world, agent, rng};
  return tick_node(*composite, raw, trace);
}

std::pair<TickStatus, TickTrace> tick_agent(const BTNode& tree, int agent, World& world, Rng& rng,
                                            const PrimitiveLibrary& primitives) {
  world.agent(agent).moved_this_tick = false;
  AgentEnv env{world, agent, rng, primitives};
  return tick(tree, env);
}

}  // namespace betr
