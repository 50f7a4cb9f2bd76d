#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "betr/evolution.hpp"
#include "betr/experiments.hpp"
#include "betr/world.hpp"

namespace betr {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Everything a run needs, resolved from defaults, a preset, a config file,
/// and command-line overrides (in that order).
struct RunConfig {
  EvolutionParams params;
  WorldConfig world;

  std::vector<Task> tasks{Task::Foraging};
  std::vector<Condition> conditions{Condition{}};
  std::size_t trials = 1;
  std::uint64_t seed = 1;
  std::vector<std::uint64_t> trial_seeds;  // explicit per-replicate seeds; empty: derived from seed
  std::size_t workers = 1;
  std::size_t record_interval = 1;
  std::size_t test_steps = 0;
  std::string ppa_grammar = "grammars/ppa.bnf";
  std::string nominal_grammar = "grammars/nominal.bnf";

  // fixed-population tests
  std::string fixed_method = "archive";  // archive | homogeneous | top_n | blended
  double fixed_n = 0.5;
  std::size_t fixed_population = kFixedPopulation;

  // sweeps
  std::string sweep_study = "conditions";  // conditions | populations
  std::vector<double> sweep_n{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
  std::size_t sweep_test_seeds = 4;
};

/// "paper", "desk" or "smoke".
RunConfig preset_config(std::string_view name);

/// Sets "section.key" from its text form. Throws ConfigError.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);

/// Every key with its current value, in a fixed order.
std::vector<std::pair<std::string, std::string>> config_values(const RunConfig& config);

/// Applies an INI file (sections [evolution] [world] [experiment] [fixed]
/// [sweep]) or a run manifest (.json, the "config" object) on top of `config`.
void load_config_file(RunConfig& config, const std::filesystem::path& path);

/// Validates cross-field constraints. Throws ConfigError.
void validate_config(const RunConfig& config);

/// Writes the resolved configuration as INI.
std::string to_ini(const RunConfig& config);

}  // namespace betr
