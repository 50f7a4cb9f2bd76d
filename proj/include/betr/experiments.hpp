#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "betr/evolution.hpp"
#include "betr/grammar.hpp"
#include "betr/primitives.hpp"
#include "betr/world.hpp"

namespace betr {

/// Ablation condition: primitive-behavior variant x grammar variant x fitness.
/// Labels look like "BeTr-PB+PPA-grammar:D+E+BT"; the variant part is one of
/// "PB", "BeTr-PB", "PB+PPA-grammar", "BeTr-PB+PPA-grammar". The aliases
/// "GEESE-BT" (PB:D+E+adhoc) and "BeTr-GEESE" (BeTr-PB+PPA-grammar:D+E+BT)
/// are accepted.
struct Condition {
  PrimitiveStyle primitives = PrimitiveStyle::Ppa;
  bool ppa_grammar = true;
  FitnessMode fitness = kBetrFitness;

  static Condition parse(std::string_view label);
  std::string variant_label() const;
  std::string label() const;
  bool operator==(const Condition&) const = default;
};

/// The nine learning-efficiency conditions (three variants under D and D+E,
/// then the ad hoc pair and the BT-feedback condition).
std::vector<Condition> fig2_conditions();

struct GrammarSet {
  std::shared_ptr<const Grammar> ppa;
  std::shared_ptr<const Grammar> nominal;

  static GrammarSet load(const std::string& ppa_path, const std::string& nominal_path);
  const Grammar& select(const Condition& c) const { return c.ppa_grammar ? *ppa : *nominal; }
};

enum class TrialMode { Learning, Test };

struct TrialSpec {
  Task task = Task::Foraging;
  TrialMode mode = TrialMode::Learning;
  EvolutionParams params;
  WorldConfig world;
  std::uint64_t seed = 0;
  Condition condition;
  std::size_t test_steps = 0;       // 0: same as params.learning_steps
  std::size_t record_interval = 1;  // the last step is always recorded
};

struct StepMetrics {
  std::size_t step = 0;
  double performance = 0;
  double mean_fitness = 0;
  double max_fitness = 0;
  std::size_t alive = 0;
};

struct TrialResult {
  double final_performance = 0;
  bool success = false;  // final_performance > kSuccessThreshold
  std::vector<StepMetrics> series;
  std::map<std::size_t, std::size_t> ppa_histogram;  // PPA subtree count -> agents
  std::size_t adoptions = 0;
};

inline constexpr double kSuccessThreshold = 0.8;
inline bool is_success(double performance) { return performance > kSuccessThreshold; }

struct ArchiveEntry {
  int agent_id = 0;
  std::string program;
  Genome genome;
  FitnessRecord fitness;
  bool alive = true;
};

struct Archive {
  Task task = Task::Foraging;
  std::string condition;
  std::uint64_t seed = 0;
  std::vector<ArchiveEntry> entries;
};

/// Directory of `agent_<id>.bt` programs plus `manifest.json`.
void save_archive(const Archive& archive, const std::filesystem::path& dir);
Archive load_archive(const std::filesystem::path& dir);

struct LearningOutcome {
  TrialResult result;
  Archive archive;
};

/// Phase order per agent and step: tick, fitness update, sense, act, update.
LearningOutcome run_learning(const TrialSpec& spec, const GrammarSet& grammars);

/// Static controllers in a freshly randomized world; the population size must
/// equal spec.params.population.
TrialResult run_test(const std::vector<BTNode>& population, const TrialSpec& spec, const GrammarSet& grammars);
TrialResult run_test(const Archive& archive, const TrialSpec& spec, const GrammarSet& grammars);

inline constexpr std::size_t kFixedPopulation = 100;

std::vector<BTNode> build_homogeneous(const Archive& archive, std::size_t size = kFixedPopulation);
std::vector<BTNode> build_top_n(const Archive& archive, double n, std::size_t size = kFixedPopulation);
std::vector<BTNode> build_blended(const Archive& archive, double n, Rng& rng, std::size_t size = kFixedPopulation);

/// PPA subtree count -> number of distinct programs (deduplicated by text).
std::map<std::size_t, std::size_t> ppa_histogram(const std::vector<Archive>& archives);

struct BoxStats {
  std::size_t count = 0;
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
  double whisker_low = 0, whisker_high = 0;  // Tukey, 1.5 IQR
  double mean = 0;
};

BoxStats box_stats(std::vector<double> values);

struct MatrixRow {
  Task task = Task::Foraging;
  Condition condition;
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  TrialResult result;
  Archive archive;
};

struct MatrixOptions {
  std::size_t workers = 1;
  std::uint64_t master_seed = 1;
  bool keep_archives = true;
  std::vector<std::uint64_t> seeds;  // explicit replicate seeds, overriding trial_seed()
};

/// Trial seed for a (task, replicate) pair. Conditions share seeds so that
/// comparisons between them are paired.
std::uint64_t trial_seed(std::uint64_t master_seed, Task task, std::size_t replicate);

/// One learning trial per (task, condition, replicate), in that order. With
/// explicit options.seeds, `replicates` is ignored and one replicate runs per seed.
std::vector<MatrixRow> condition_matrix(const std::vector<Task>& tasks, const std::vector<Condition>& conditions,
                                        std::size_t replicates, const TrialSpec& base, const GrammarSet& grammars,
                                        const MatrixOptions& options);

struct ConditionSummary {
  Task task = Task::Foraging;
  std::string condition;
  BoxStats performance;
  double success_rate = 0;
};

std::vector<ConditionSummary> summarize(const std::vector<MatrixRow>& rows);

struct PopulationRow {
  Task task = Task::Foraging;
  std::string method;  // homogeneous | top_n | blended
  double n = 0;
  std::size_t archive = 0;
  std::size_t test_seed = 0;
  double performance = 0;
};

struct PopulationStudy {
  std::vector<double> n_values;
  std::size_t test_seeds = 4;
  std::size_t population = kFixedPopulation;
  bool homogeneous = true;
  bool top_n = true;
  bool blended = true;
};

/// Tests fixed populations built from each archive (archives must come from
/// the same task as `base`).
std::vector<PopulationRow> population_study(const std::vector<Archive>& archives, const PopulationStudy& study,
                                            const TrialSpec& base, const GrammarSet& grammars,
                                            const MatrixOptions& options);

// --- outputs -----------------------------------------------------------------

void write_series_csv(std::ostream& out, const TrialResult& result);
void write_results_csv(std::ostream& out, const std::vector<MatrixRow>& rows);
void write_population_csv(std::ostream& out, const std::vector<PopulationRow>& rows);
std::string summary_json(const std::vector<MatrixRow>& rows);

/// Runs `jobs` indexed tasks on up to `workers` threads.
void parallel_for(std::size_t jobs, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace betr
