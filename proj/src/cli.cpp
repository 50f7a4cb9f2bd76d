#include "betr/cli.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "betr/config.hpp"
#include "betr/experiments.hpp"

namespace betr {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string config_path;
  std::string preset;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::size_t> trials;
  std::string out = "out";
  std::vector<std::string> overrides;
  std::string task;
  std::string condition;
  std::vector<std::string> positional;
};

RunConfig resolve(const Options& o) {
  RunConfig c = o.preset.empty() ? RunConfig{} : preset_config(o.preset);
  if (!o.config_path.empty()) load_config_file(c, o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.workers) c.workers = *o.workers;
  if (o.trials) c.trials = *o.trials;
  if (!o.task.empty()) set_config_value(c, "experiment.tasks", o.task);
  if (!o.condition.empty()) set_config_value(c, "experiment.conditions", o.condition);
  for (const auto& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--override expects key=value, got '" + kv + "'");
    set_config_value(c, kv.substr(0, eq), kv.substr(eq + 1));
  }
  validate_config(c);
  return c;
}

// Relative grammar paths fall back to the source tree, so the binaries work
// from the build directory too.
std::string locate(const std::string& path) {
  if (fs::exists(path) || fs::path(path).is_absolute()) return path;
#ifdef BETR_SOURCE_DIR
  const auto alt = fs::path(BETR_SOURCE_DIR) / path;
  if (fs::exists(alt)) return alt.string();
#endif
  return path;
}

GrammarSet load_grammars(const RunConfig& c) {
  try {
    return GrammarSet::load(locate(c.ppa_grammar), locate(c.nominal_grammar));
  } catch (const GrammarError& e) {
    throw ConfigError(std::string("grammar: ") + e.what());
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
}

TrialSpec base_spec(const RunConfig& c) {
  TrialSpec s;
  s.task = c.tasks.front();
  s.params = c.params;
  s.world = c.world;
  s.condition = c.conditions.front();
  s.params.fitness_mode = s.condition.fitness;
  s.test_steps = c.test_steps;
  s.record_interval = c.record_interval;
  return s;
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

void write_manifest(const fs::path& dir, const std::string& command, const RunConfig& c, json extra = json::object()) {
  json config = json::object();
  for (const auto& [k, v] : config_values(c)) config[k] = v;
  json m = {{"tool", "betr"}, {"version", kToolVersion}, {"command", command}, {"config", config}};
  for (auto& [k, v] : extra.items()) m[k] = v;
  write_text(dir / "manifest.json", m.dump(2) + "\n");
}

std::string sanitize(std::string s) {
  for (auto& ch : s)
    if (ch == ':' || ch == '+') ch = '_';
  return s;
}

json result_json(const TrialResult& r) {
  json hist = json::object();
  for (auto [k, v] : r.ppa_histogram) hist[std::to_string(k)] = v;
  return {{"final_performance", r.final_performance},
          {"success", r.success},
          {"adoptions", r.adoptions},
          {"ppa_histogram", hist}};
}

// --- commands ----------------------------------------------------------------

int cmd_learn(const RunConfig& c, const Options& o, std::ostream& out) {
  const auto grammars = load_grammars(c);
  auto spec = base_spec(c);
  spec.seed = c.trial_seeds.empty() ? trial_seed(c.seed, spec.task, 0) : c.trial_seeds.front();
  const auto outcome = run_learning(spec, grammars);

  const fs::path dir = o.out;
  std::ostringstream series;
  write_series_csv(series, outcome.result);
  write_text(dir / "series.csv", series.str());
  write_text(dir / "result.json", result_json(outcome.result).dump(2) + "\n");
  save_archive(outcome.archive, dir / "archive");
  write_manifest(dir, "learn", c, {{"trial_seed", spec.seed}});
  out << to_string(spec.task) << ' ' << spec.condition.label() << " seed " << spec.seed
      << " performance " << outcome.result.final_performance << (outcome.result.success ? " (success)" : "") << '\n';
  return 0;
}

std::vector<BTNode> fixed_population(const RunConfig& c, const Archive& archive, Rng& rng) {
  if (c.fixed_method == "archive") {
    std::vector<BTNode> trees;
    for (const auto& e : archive.entries) trees.push_back(build_tree(e.program));
    return trees;
  }
  if (c.fixed_method == "homogeneous") return build_homogeneous(archive, c.fixed_population);
  if (c.fixed_method == "top_n") return build_top_n(archive, c.fixed_n, c.fixed_population);
  return build_blended(archive, c.fixed_n, rng, c.fixed_population);
}

int cmd_test(const RunConfig& c, const Options& o, std::ostream& out) {
  if (o.positional.size() != 1) throw ConfigError("test expects one archive directory");
  const auto archive = load_archive(o.positional.front());
  if (archive.entries.empty()) throw std::runtime_error("archive is empty");
  const auto grammars = load_grammars(c);

  auto spec = base_spec(c);
  spec.task = archive.task;
  spec.mode = TrialMode::Test;
  try {
    spec.condition = Condition::parse(archive.condition);
  } catch (const std::invalid_argument&) {
  }
  spec.params.fitness_mode = spec.condition.fitness;

  const std::size_t runs = c.trial_seeds.empty() ? c.trials : c.trial_seeds.size();
  const fs::path dir = o.out;
  std::ostringstream table;
  table << "method,n,seed,performance\n";
  for (std::size_t r = 0; r < runs; ++r) {
    spec.seed = c.trial_seeds.empty() ? derive_seed(c.seed, {static_cast<std::uint64_t>(spec.task), 0x7e57, r})
                                      : c.trial_seeds[r];
    Rng blend_rng(derive_seed(spec.seed, {0xB1E4D}));
    const auto population = fixed_population(c, archive, blend_rng);
    spec.params.population = population.size();
    const auto result = run_test(population, spec, grammars);
    table << c.fixed_method << ',' << c.fixed_n << ',' << spec.seed << ',' << result.final_performance << '\n';
    std::ostringstream series;
    write_series_csv(series, result);
    write_text(dir / ("series_" + std::to_string(r) + ".csv"), series.str());
    out << c.fixed_method << " seed " << spec.seed << " performance " << result.final_performance << '\n';
  }
  write_text(dir / "test.csv", table.str());
  write_manifest(dir, "test", c, {{"archive", fs::absolute(o.positional.front()).string()}});
  return 0;
}

int cmd_sweep(const RunConfig& c, const Options& o, std::ostream& out) {
  const auto grammars = load_grammars(c);
  const fs::path dir = o.out;
  MatrixOptions mo;
  mo.workers = c.workers;
  mo.master_seed = c.seed;
  mo.seeds = c.trial_seeds;

  if (c.sweep_study == "conditions") {
    if (!o.positional.empty()) throw ConfigError("a conditions sweep takes no arguments");
    const auto rows = condition_matrix(c.tasks, c.conditions, c.trials, base_spec(c), grammars, mo);
    std::ostringstream csv;
    write_results_csv(csv, rows);
    write_text(dir / "results.csv", csv.str());
    write_text(dir / "summary.json", summary_json(rows) + "\n");
    for (const auto& row : rows)
      save_archive(row.archive, dir / "archives" / std::string(to_string(row.task)) / sanitize(row.condition.label()) /
                                    ("r" + std::to_string(row.replicate)));
    write_manifest(dir, "sweep", c);
    for (const auto& s : summarize(rows))
      out << to_string(s.task) << ' ' << s.condition << " median " << s.performance.median << " success "
          << s.success_rate << '\n';
    return 0;
  }

  std::vector<Archive> archives;
  if (o.positional.empty()) {
    mo.keep_archives = true;
    for (auto& row : condition_matrix({c.tasks.front()}, {c.conditions.front()}, c.trials, base_spec(c), grammars, mo))
      archives.push_back(std::move(row.archive));
  } else {
    for (const auto& p : o.positional) archives.push_back(load_archive(p));
  }
  PopulationStudy study;
  study.n_values = c.sweep_n;
  study.test_seeds = c.sweep_test_seeds;
  study.population = c.fixed_population;
  auto base = base_spec(c);
  base.mode = TrialMode::Test;
  const auto rows = population_study(archives, study, base, grammars, mo);
  std::ostringstream csv;
  write_population_csv(csv, rows);
  write_text(dir / "population.csv", csv.str());
  write_manifest(dir, "sweep", c);
  out << rows.size() << " fixed-population tests written to " << (dir / "population.csv").string() << '\n';
  return 0;
}

int cmd_inspect(const Options& o, std::ostream& out) {
  if (o.positional.size() != 1) throw ConfigError("inspect expects one .bt file");
  std::ifstream in(o.positional.front());
  if (!in) throw ConfigError("cannot open " + o.positional.front());
  std::stringstream ss;
  ss << in.rdbuf();
  auto text = ss.str();
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.pop_back();
  const auto tree = build_tree(text);
  out << pretty_print(tree);
  out << "PPA subtrees: " << count_ppa_subtrees(tree) << '\n';
  out << "nodes: " << tree_size(tree) << '\n';
  out << "unique behaviors: " << unique_behavior_nodes(tree) << '\n';
  return 0;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::string box_row(const BoxStats& b) {
  std::ostringstream s;
  s << b.count << ',' << b.min << ',' << b.q1 << ',' << b.median << ',' << b.q3 << ',' << b.max << ','
    << b.whisker_low << ',' << b.whisker_high << ',' << b.mean;
  return s.str();
}

int cmd_plotdata(const Options& o, std::ostream& out) {
  if (o.positional.size() != 1) throw ConfigError("plotdata expects one sweep output directory");
  const fs::path src = o.positional.front();
  const fs::path dir = o.out;
  bool wrote = false;

  if (fs::exists(src / "results.csv")) {
    // final row of every (task, condition, seed) series
    std::map<std::pair<std::string, std::string>, std::map<std::string, std::pair<long, double>>> last;
    std::vector<std::pair<std::string, std::string>> order;
    const auto rows = read_csv(src / "results.csv");
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto& r = rows[i];
      if (r.size() < 5) continue;
      const auto key = std::make_pair(r[0], r[1]);
      if (!last.count(key)) order.push_back(key);
      auto& slot = last[key][r[2]];
      const long step = std::stol(r[3]);
      if (step >= slot.first) slot = {step, std::stod(r[4])};
    }
    for (const auto& [task, file] : {std::pair{"foraging", "fig2a.csv"}, std::pair{"nest_maintenance", "fig2b.csv"}}) {
      std::ostringstream csv;
      csv << "condition,trials,min,q1,median,q3,max,whisker_low,whisker_high,mean,success_rate\n";
      bool any = false;
      for (const auto& key : order) {
        if (key.first != task) continue;
        std::vector<double> v;
        for (const auto& [seed, sp] : last[key]) v.push_back(sp.second);
        const auto wins = std::count_if(v.begin(), v.end(), is_success);
        csv << key.second << ',' << box_row(box_stats(v)) << ','
            << static_cast<double>(wins) / static_cast<double>(v.size()) << '\n';
        any = true;
      }
      if (any) {
        write_text(dir / file, csv.str());
        out << "wrote " << (dir / file).string() << '\n';
        wrote = true;
      }
    }
  }

  if (fs::exists(src / "population.csv")) {
    std::map<std::tuple<std::string, std::string, double>, std::vector<double>> groups;
    const auto rows = read_csv(src / "population.csv");
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto& r = rows[i];
      if (r.size() < 6) continue;
      groups[{r[0], r[1], std::stod(r[2])}].push_back(std::stod(r[5]));
    }
    std::ostringstream csv;
    csv << "task,method,n,count,min,q1,median,q3,max,whisker_low,whisker_high,mean\n";
    for (const auto& [key, v] : groups)
      csv << std::get<0>(key) << ',' << std::get<1>(key) << ',' << std::get<2>(key) << ',' << box_row(box_stats(v))
          << '\n';
    write_text(dir / "fig3.csv", csv.str());
    out << "wrote " << (dir / "fig3.csv").string() << '\n';
    wrote = true;
  }
  if (!wrote) throw std::runtime_error("no results.csv or population.csv in " + src.string());
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Swarm behavior evolution with PPA behavior trees and grammatical evolution", "betr"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  Options o;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "INI config file or a run manifest (.json)");
    sub->add_option("--preset", o.preset, "paper | desk | smoke");
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--workers", o.workers, "worker threads");
    sub->add_option("--out", o.out, "output directory");
    sub->add_option("--override", o.overrides, "section.key=value (repeatable)")->allow_extra_args(false);
    sub->add_option("--task", o.task, "foraging | nest_maintenance (comma separated)");
    sub->add_option("--condition", o.condition, "condition label, e.g. BeTr-PB+PPA-grammar:D+E+BT");
    sub->add_option("--trials", o.trials, "replicates per condition");
  };
  auto* learn = app.add_subcommand("learn", "run one learning trial");
  auto* test = app.add_subcommand("test", "replay an archive as a fixed population");
  auto* sweep = app.add_subcommand("sweep", "run a condition matrix or a fixed-population study");
  auto* inspect = app.add_subcommand("inspect", "print a serialized tree with PPA annotation");
  auto* plotdata = app.add_subcommand("plotdata", "turn sweep outputs into per-figure tables");
  for (auto* sub : {learn, test, sweep, inspect, plotdata}) add_common(sub);
  test->add_option("archive", o.positional, "archive directory")->required();
  sweep->add_option("archives", o.positional, "archive directories (populations study)");
  inspect->add_option("file", o.positional, "tree file")->required();
  plotdata->add_option("dir", o.positional, "sweep output directory")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "betr: " << e.what() << '\n';
    return 1;
  }

  try {
    if (inspect->parsed()) return cmd_inspect(o, out);
    if (plotdata->parsed()) return cmd_plotdata(o, out);
    const auto config = resolve(o);
    if (learn->parsed()) return cmd_learn(config, o, out);
    if (test->parsed()) return cmd_test(config, o, out);
    return cmd_sweep(config, o, out);
  } catch (const ConfigError& e) {
    err << "betr: config error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "betr: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace betr
