#include "betr/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace betr {

namespace {

struct ModeToken {
  std::string_view name;
  unsigned mask;
};

constexpr ModeToken kModeTokens[] = {
    {"D", static_cast<unsigned>(FitnessComponent::Diversity)},
    {"E", static_cast<unsigned>(FitnessComponent::Exploration)},
    {"P", static_cast<unsigned>(FitnessComponent::Prospective)},
    {"T", static_cast<unsigned>(FitnessComponent::TaskSpecific)},
    {"adhoc",
     static_cast<unsigned>(FitnessComponent::Prospective) | static_cast<unsigned>(FitnessComponent::TaskSpecific)},
    {"BT", static_cast<unsigned>(FitnessComponent::BTFeedback)},
};

}  // namespace

FitnessMode FitnessMode::parse(std::string_view label) {
  unsigned mask = 0;
  std::size_t start = 0;
  while (start <= label.size()) {
    auto plus = label.find('+', start);
    if (plus == std::string_view::npos) plus = label.size();
    const auto token = label.substr(start, plus - start);
    const auto it = std::find_if(std::begin(kModeTokens), std::end(kModeTokens),
                                 [&](const ModeToken& t) { return t.name == token; });
    if (it == std::end(kModeTokens))
      throw std::invalid_argument("unknown fitness component '" + std::string(token) + "'");
    mask |= it->mask;
    start = plus + 1;
  }
  return FitnessMode(mask);
}

std::string FitnessMode::label() const {
  std::string out;
  const auto add = [&](std::string_view s) {
    if (!out.empty()) out += '+';
    out += s;
  };
  if (has(FitnessComponent::Diversity)) add("D");
  if (has(FitnessComponent::Exploration)) add("E");
  if (has(FitnessComponent::Prospective) && has(FitnessComponent::TaskSpecific)) {
    add("adhoc");
  } else {
    if (has(FitnessComponent::Prospective)) add("P");
    if (has(FitnessComponent::TaskSpecific)) add("T");
  }
  if (has(FitnessComponent::BTFeedback)) add("BT");
  return out;
}

void EvolutionParams::validate() const {
  const auto prob = [](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument(std::string(name) + " must lie in [0,1]");
  };
  prob(interaction_prob, "interaction_prob");
  prob(mutation_prob, "mutation_prob");
  prob(crossover_prob, "crossover_prob");
  if (storage_threshold < 1) throw std::invalid_argument("storage_threshold must be >= 1");
  if (!(beta >= 0.0 && beta < 1.0)) throw std::invalid_argument("beta must lie in [0,1)");
  if (max_tree_depth < 1) throw std::invalid_argument("max_tree_depth must be positive");
  if (population == 0) throw std::invalid_argument("population must be positive");
  if (genome_length == 0) throw std::invalid_argument("genome_length must be positive");
  if (max_genome_length < genome_length) throw std::invalid_argument("max_genome_length < genome_length");
  if (!(truncation_fraction > 0.0 && truncation_fraction <= 1.0))
    throw std::invalid_argument("truncation_fraction must lie in (0,1]");
  if (fitness_mode.mask() == 0) throw std::invalid_argument("fitness mode is empty");
}

// --- fitness -----------------------------------------------------------------

double diversity_fitness(const BTNode& tree, const Grammar& grammar) {
  const auto total = grammar.behavior_vocabulary().size();
  if (total == 0) return 0.0;
  return std::min(1.0, static_cast<double>(unique_behavior_nodes(tree)) / static_cast<double>(total));
}

double exploration_fitness(const AgentBody& agent) { return static_cast<double>(agent.visited_count); }

double bt_feedback(const TickTrace& t) {
  return 1.0 * t.postcondition_successes - 2.0 * t.constraint_failures + 1.0 * t.root_selector_successes;
}

double prospective_fitness(const TickTrace& t) { return t.pickups + t.carry_steps + t.goal_drops; }

double task_specific_fitness(double performance, std::size_t population) {
  return performance * static_cast<double>(population);
}

double overall_fitness(double previous, double diversity, double exploration, double feedback, double beta) {
  return beta * previous + (diversity + exploration + feedback);
}

double ablation_fitness(FitnessMode mode, const FitnessInputs& in) {
  if (mode.mask() == 0) throw std::invalid_argument("fitness mode is empty");
  double inc = 0;
  if (mode.has(FitnessComponent::Diversity)) inc += in.diversity;
  if (mode.has(FitnessComponent::Exploration)) inc += in.exploration;
  if (mode.has(FitnessComponent::Prospective)) inc += in.prospective;
  if (mode.has(FitnessComponent::TaskSpecific)) inc += in.task_specific;
  if (mode.has(FitnessComponent::BTFeedback)) inc += in.bt_feedback;
  return inc;
}

double comparison_score(const FitnessRecord& r, double beta) { return (1.0 - beta) * r.overall; }

void update_fitness(FitnessRecord& r, FitnessMode mode, const FitnessInputs& in, double beta) {
  r.overall = beta * r.overall + ablation_fitness(mode, in);
  r.exploration = in.exploration;
  r.bt_feedback = in.bt_feedback;
  r.prospective = in.prospective;
  r.task_specific = in.task_specific;
}

// --- operators -----------------------------------------------------------------

std::vector<PoolEntry> truncation_select(std::vector<PoolEntry> entries, double fraction) {
  if (entries.empty()) return entries;
  std::stable_sort(entries.begin(), entries.end(),
                   [](const PoolEntry& a, const PoolEntry& b) { return a.fitness > b.fitness; });
  const auto keep = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(entries.size()) - 1e-9)), 1,
      entries.size());
  entries.resize(keep);
  return entries;
}

std::pair<Genome, Genome> crossover_at(const Genome& a, const Genome& b, std::size_t cut_a, std::size_t cut_b,
                                       std::size_t max_length) {
  if (cut_a > a.size() || cut_b > b.size()) throw std::out_of_range("crossover cut beyond genome end");
  Genome x, y;
  x.codons.reserve(cut_a + b.size() - cut_b);
  x.codons.assign(a.codons.begin(), a.codons.begin() + static_cast<std::ptrdiff_t>(cut_a));
  x.codons.insert(x.codons.end(), b.codons.begin() + static_cast<std::ptrdiff_t>(cut_b), b.codons.end());
  y.codons.assign(b.codons.begin(), b.codons.begin() + static_cast<std::ptrdiff_t>(cut_b));
  y.codons.insert(y.codons.end(), a.codons.begin() + static_cast<std::ptrdiff_t>(cut_a), a.codons.end());
  if (x.codons.size() > max_length) x.codons.resize(max_length);
  if (y.codons.size() > max_length) y.codons.resize(max_length);
  return {std::move(x), std::move(y)};
}

std::pair<Genome, Genome> variable_onepoint_crossover(const Genome& a, const Genome& b, Rng& rng,
                                                      std::size_t max_length) {
  const auto cut_a = 1 + rng.below(a.size());
  const auto cut_b = 1 + rng.below(b.size());
  return crossover_at(a, b, cut_a, cut_b, max_length);
}

std::size_t mutate(Genome& g, double p, Rng& rng) {
  std::size_t n = 0;
  for (auto& c : g.codons) {
    if (rng.bernoulli(p)) {
      c = static_cast<std::uint32_t>(rng.below(kCodonRange));
      ++n;
    }
  }
  return n;
}

// --- sense / act / update --------------------------------------------------------

void sense(int agent, const World& world, std::vector<Learner>& learners, const EvolutionParams& params, Rng& rng) {
  const auto& self = world.agent(agent);
  if (!self.alive) return;
  const int range = world.config().perception_range;
  auto& pool = learners[static_cast<std::size_t>(agent)].pool;
  for (const auto& other : world.agents()) {
    if (other.id == agent || !other.alive || chebyshev(self.position, other.position) > range) continue;
    if (rng.bernoulli(params.interaction_prob)) {
      const auto& donor = learners[static_cast<std::size_t>(other.id)];
      pool.entries.push_back({donor.genome, donor.fitness.overall});
    }
  }
}

namespace {

Candidate evaluate_offspring(Genome g, double parent_fitness, const EvolutionParams& params,
                             const Grammar& grammar) {
  Candidate c;
  c.phenotype = map_genotype(g, grammar, params.mapping());
  if (c.phenotype) {
    c.diversity = diversity_fitness(build_tree(c.phenotype->text), grammar);
    c.score = c.diversity + (1.0 - params.beta) * parent_fitness;
  }
  c.genome = std::move(g);
  return c;
}

}  // namespace

std::optional<std::vector<Candidate>> act(Learner& learner, const EvolutionParams& params, const Grammar& grammar,
                                          Rng& rng) {
  if (learner.pool.size() <= params.storage_threshold) return std::nullopt;

  auto entries = std::move(learner.pool.entries);
  learner.pool.clear();
  entries.push_back({learner.genome, learner.fitness.overall});
  auto parents = truncation_select(std::move(entries), params.truncation_fraction);
  rng.shuffle(parents.begin(), parents.end());

  std::vector<Candidate> out;
  out.reserve(parents.size() + 1);
  for (std::size_t i = 0; i < parents.size(); i += 2) {
    const auto& a = parents[i];
    const auto& b = i + 1 < parents.size() ? parents[i + 1] : parents[rng.below(parents.size())];
    auto children = rng.bernoulli(params.crossover_prob)
                        ? variable_onepoint_crossover(a.genome, b.genome, rng, params.max_genome_length)
                        : std::pair<Genome, Genome>{a.genome, b.genome};
    mutate(children.first, params.mutation_prob, rng);
    mutate(children.second, params.mutation_prob, rng);
    const double parent_fitness = 0.5 * (a.fitness + b.fitness);
    out.push_back(evaluate_offspring(std::move(children.first), parent_fitness, params, grammar));
    out.push_back(evaluate_offspring(std::move(children.second), parent_fitness, params, grammar));
  }
  return out;
}

bool update(Learner& learner, std::vector<Candidate> candidates, double beta) {
  Candidate* best = nullptr;
  for (auto& c : candidates)
    if (c.phenotype && (!best || c.score > best->score)) best = &c;
  if (!best || !(best->score > comparison_score(learner.fitness, beta))) return false;
  learner.genome = std::move(best->genome);
  learner.phenotype = std::move(*best->phenotype);
  learner.tree = build_tree(learner.phenotype.text);
  learner.fitness.diversity = best->diversity;
  ++learner.adoptions;
  return true;
}

Learner make_learner(const EvolutionParams& params, const Grammar& grammar, Rng& rng) {
  for (int attempt = 0; attempt < 1000; ++attempt) {
    auto genome = random_genome(params.genome_length, rng);
    auto phenotype = map_genotype(genome, grammar, params.mapping());
    if (!phenotype) continue;
    Learner l;
    l.tree = build_tree(phenotype->text);
    l.fitness.diversity = diversity_fitness(l.tree, grammar);
    l.genome = std::move(genome);
    l.phenotype = std::move(*phenotype);
    return l;
  }
  throw std::runtime_error("grammar produced no valid individual in 1000 random genomes");
}

}  // namespace betr
