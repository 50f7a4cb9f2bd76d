#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "betr/btree.hpp"
#include "betr/grammar.hpp"
#include "betr/rng.hpp"
#include "betr/world.hpp"

namespace betr {

enum class FitnessComponent : unsigned {
  Diversity = 1u << 0,     // type I
  Exploration = 1u << 1,   // type II
  Prospective = 1u << 2,   // type III, ad hoc
  TaskSpecific = 1u << 3,  // type IV, ad hoc
  BTFeedback = 1u << 4,    // type V
};

/// Subset of fitness components blended into A_t.
class FitnessMode {
 public:
  constexpr FitnessMode() = default;
  constexpr explicit FitnessMode(unsigned mask) : mask_(mask) {}

  /// "D", "D+E", "D+E+adhoc", "D+E+BT"; also any '+'-joined list of
  /// D, E, P (prospective), T (task-specific), adhoc (= P+T) and BT.
  static FitnessMode parse(std::string_view label);
  std::string label() const;

  bool has(FitnessComponent c) const { return (mask_ & static_cast<unsigned>(c)) != 0; }
  unsigned mask() const { return mask_; }
  bool operator==(const FitnessMode&) const = default;

 private:
  unsigned mask_ = 0;
};

inline constexpr FitnessMode kBetrFitness{0b10011};   // D+E+BT
inline constexpr FitnessMode kAdHocFitness{0b01111};  // D+E+III+IV

struct EvolutionParams {
  std::size_t storage_threshold = 7;
  double interaction_prob = 0.85;
  double mutation_prob = 0.01;
  double crossover_prob = 0.9;
  int max_tree_depth = 10;
  std::size_t population = 100;
  std::size_t learning_steps = 12000;
  double beta = 0.9;
  FitnessMode fitness_mode = kBetrFitness;

  std::size_t genome_length = 100;
  std::size_t max_genome_length = 200;
  int max_wraps = 3;
  double truncation_fraction = 0.5;
  double exploration_cap = 0;  // 0 disables the cap on E_t

  void validate() const;
  MappingOptions mapping() const { return {max_tree_depth, max_wraps}; }
};

struct FitnessRecord {
  double overall = 0;        // A_t
  double diversity = 0;      // D
  double exploration = 0;    // E_t
  double bt_feedback = 0;    // B_t
  double prospective = 0;    // type III, last increment
  double task_specific = 0;  // type IV, last increment
};

struct PoolEntry {
  Genome genome;
  double fitness = 0;  // donor fitness at exchange time
};

struct GenePool {
  std::vector<PoolEntry> entries;

  std::size_t size() const { return entries.size(); }
  void clear() { entries.clear(); }
};

/// One evolving agent's genetic state; its body lives in the World.
struct Learner {
  Genome genome;
  PhenotypeExpr phenotype;
  BTNode tree;
  FitnessRecord fitness;
  GenePool pool;
  std::size_t adoptions = 0;
};

struct Candidate {
  Genome genome;
  std::optional<PhenotypeExpr> phenotype;  // nullopt: invalid individual
  double diversity = 0;
  double score = -std::numeric_limits<double>::infinity();
};

// --- fitness ---------------------------------------------------------------

struct FitnessInputs {
  double diversity = 0;
  double exploration = 0;
  double bt_feedback = 0;
  double prospective = 0;
  double task_specific = 0;
};

double diversity_fitness(const BTNode& tree, const Grammar& grammar);
double exploration_fitness(const AgentBody& agent);
double bt_feedback(const TickTrace& trace);
double prospective_fitness(const TickTrace& trace);
double task_specific_fitness(double task_performance, std::size_t population);
double overall_fitness(double previous, double diversity, double exploration, double feedback, double beta);

/// Per-step increment of the modes' components (throws on an empty mode).
double ablation_fitness(FitnessMode mode, const FitnessInputs& in);

/// A_t in per-step units, (1 - beta) * A_t; a constant increment c converges
/// to c.
double comparison_score(const FitnessRecord& record, double beta);

/// A_t = beta * A_{t-1} + ablation_fitness(mode, in).
void update_fitness(FitnessRecord& record, FitnessMode mode, const FitnessInputs& in, double beta);

// --- genetic operators -------------------------------------------------------

/// Stable sort by fitness (descending), keep ceil(fraction * n), at least one.
std::vector<PoolEntry> truncation_select(std::vector<PoolEntry> entries, double fraction);

/// Swap the tails after independent cut points; cuts are in [1, len].
/// Offspring longer than max_length are truncated.
std::pair<Genome, Genome> crossover_at(const Genome& a, const Genome& b, std::size_t cut_a, std::size_t cut_b,
                                       std::size_t max_length);
std::pair<Genome, Genome> variable_onepoint_crossover(const Genome& a, const Genome& b, Rng& rng,
                                                      std::size_t max_length);

/// Each codon is redrawn uniformly with probability p. Returns the number of
/// redrawn codons.
std::size_t mutate(Genome& genome, double p, Rng& rng);

// --- sense / act / update ------------------------------------------------------

/// Neighbors within perception range donate (genome, fitness) with
/// probability interaction_prob. Dead agents neither sense nor donate.
void sense(int agent, const World& world, std::vector<Learner>& learners, const EvolutionParams& params, Rng& rng);

/// Selection, crossover and mutation over the pool once it holds more than
/// storage_threshold entries; the agent's own genome joins the pool first and
/// the pool is cleared afterwards. Offspring score = D + (1 - beta) * mean
/// parent fitness.
std::optional<std::vector<Candidate>> act(Learner& learner, const EvolutionParams& params, const Grammar& grammar,
                                          Rng& rng);

/// Adopts the best candidate iff its score strictly exceeds
/// comparison_score(A_t).
bool update(Learner& learner, std::vector<Candidate> candidates, double beta);

/// Random valid initial controller (resamples genomes that fail to map).
Learner make_learner(const EvolutionParams& params, const Grammar& grammar, Rng& rng);

}  // namespace betr
