#include "betr/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace betr {

using nlohmann::json;

// --- conditions -------------------------------------------------------------------

Condition Condition::parse(std::string_view label) {
  if (label == "GEESE-BT") return {PrimitiveStyle::Nominal, false, kAdHocFitness};
  if (label == "BeTr-GEESE") return {PrimitiveStyle::Ppa, true, kBetrFitness};

  const auto colon = label.find(':');
  if (colon == std::string_view::npos)
    throw std::invalid_argument("condition '" + std::string(label) + "' lacks ':<fitness>'");
  auto variant = label.substr(0, colon);
  Condition c;
  c.fitness = FitnessMode::parse(label.substr(colon + 1));

  constexpr std::string_view grammar_suffix = "+PPA-grammar";
  c.ppa_grammar = variant.size() > grammar_suffix.size() &&
                  variant.substr(variant.size() - grammar_suffix.size()) == grammar_suffix;
  if (c.ppa_grammar) variant.remove_suffix(grammar_suffix.size());
  if (variant == "PB")
    c.primitives = PrimitiveStyle::Nominal;
  else if (variant == "BeTr-PB")
    c.primitives = PrimitiveStyle::Ppa;
  else
    throw std::invalid_argument("unknown condition variant '" + std::string(label.substr(0, colon)) + "'");
  return c;
}

std::string Condition::variant_label() const {
  std::string s = primitives == PrimitiveStyle::Ppa ? "BeTr-PB" : "PB";
  if (ppa_grammar) s += "+PPA-grammar";
  return s;
}

std::string Condition::label() const { return variant_label() + ":" + fitness.label(); }

std::vector<Condition> fig2_conditions() {
  std::vector<Condition> out;
  for (const char* mode : {"D", "D+E"})
    for (const char* variant : {"PB", "BeTr-PB", "BeTr-PB+PPA-grammar"})
      out.push_back(Condition::parse(std::string(variant) + ":" + mode));
  out.push_back(Condition::parse("PB:D+E+adhoc"));
  out.push_back(Condition::parse("BeTr-PB:D+E+adhoc"));
  out.push_back(Condition::parse("BeTr-PB+PPA-grammar:D+E+BT"));
  return out;
}

GrammarSet GrammarSet::load(const std::string& ppa_path, const std::string& nominal_path) {
  return {std::make_shared<const Grammar>(load_grammar(ppa_path)),
          std::make_shared<const Grammar>(load_grammar(nominal_path))};
}

// --- simulation ---------------------------------------------------------------------

namespace {

WorldConfig world_for(const TrialSpec& spec) {
  auto wc = spec.world;
  wc.object_count = static_cast<int>(spec.params.population);
  return wc;
}

std::map<std::size_t, std::size_t> agent_ppa_histogram(const std::vector<Learner>& learners) {
  std::map<std::size_t, std::size_t> h;
  for (const auto& l : learners) ++h[count_ppa_subtrees(l.tree)];
  return h;
}

StepMetrics measure(std::size_t step, const World& world, const std::vector<Learner>& learners) {
  StepMetrics m;
  m.step = step;
  m.performance = task_performance(world);
  double sum = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& a : world.agents()) {
    if (!a.alive) continue;
    const double f = learners[static_cast<std::size_t>(a.id)].fitness.overall;
    sum += f;
    best = std::max(best, f);
    ++m.alive;
  }
  if (m.alive) {
    m.mean_fitness = sum / static_cast<double>(m.alive);
    m.max_fitness = best;
  }
  return m;
}

TrialResult simulate(const TrialSpec& spec, const Grammar& grammar, std::vector<Learner>& learners, World& world,
                     Rng& rng, bool learning) {
  const auto& params = spec.params;
  const auto& primitives = primitive_library(spec.condition.primitives);
  const auto mode = spec.condition.fitness;
  const bool needs_performance = mode.has(FitnessComponent::TaskSpecific);
  const std::size_t steps = !learning && spec.test_steps ? spec.test_steps : params.learning_steps;
  const std::size_t interval = std::max<std::size_t>(1, spec.record_interval);

  Rng agent_rng = rng.split();
  Rng evo_rng = rng.split();
  Rng schedule_rng = rng.split();

  std::vector<int> order(learners.size());
  std::iota(order.begin(), order.end(), 0);

  TrialResult result;
  for (std::size_t step = 1; step <= steps; ++step) {
    const double performance = needs_performance ? task_performance(world) : 0.0;
    schedule_rng.shuffle(order.begin(), order.end());
    for (int id : order) {
      if (!world.agent(id).alive) continue;
      auto& learner = learners[static_cast<std::size_t>(id)];
      const auto trace = tick_agent(learner.tree, id, world, agent_rng, primitives).second;

      const auto& body = world.agent(id);
      FitnessInputs in;
      in.diversity = learner.fitness.diversity;
      in.exploration = exploration_fitness(body);
      if (params.exploration_cap > 0) in.exploration = std::min(in.exploration, params.exploration_cap);
      in.bt_feedback = bt_feedback(trace);
      in.prospective = prospective_fitness(trace);
      in.task_specific = task_specific_fitness(performance, params.population);
      update_fitness(learner.fitness, mode, in, params.beta);

      if (!learning || !body.alive) continue;
      sense(id, world, learners, params, evo_rng);
      if (auto candidates = act(learner, params, grammar, evo_rng))
        update(learner, std::move(*candidates), params.beta);
    }
    world.advance_step();
    if (step % interval == 0 || step == steps) result.series.push_back(measure(step, world, learners));
  }

  result.final_performance = task_performance(world);
  result.success = is_success(result.final_performance);
  result.ppa_histogram = agent_ppa_histogram(learners);
  for (const auto& l : learners) result.adoptions += l.adoptions;
  return result;
}

void validate_spec(const TrialSpec& spec) {
  spec.params.validate();
  world_for(spec).validate();
}

}  // namespace

LearningOutcome run_learning(const TrialSpec& spec, const GrammarSet& grammars) {
  validate_spec(spec);
  const auto& grammar = grammars.select(spec.condition);
  Rng rng(spec.seed);
  Rng world_rng = rng.split();
  Rng init_rng = rng.split();

  World world = init_world(world_for(spec), spec.task, world_rng, spec.params.population);
  std::vector<Learner> learners;
  learners.reserve(spec.params.population);
  for (std::size_t i = 0; i < spec.params.population; ++i)
    learners.push_back(make_learner(spec.params, grammar, init_rng));

  LearningOutcome out;
  out.result = simulate(spec, grammar, learners, world, rng, true);
  out.archive.task = spec.task;
  out.archive.condition = spec.condition.label();
  out.archive.seed = spec.seed;
  for (std::size_t i = 0; i < learners.size(); ++i) {
    auto& l = learners[i];
    out.archive.entries.push_back({static_cast<int>(i), std::move(l.phenotype.text), std::move(l.genome), l.fitness,
                                   world.agent(static_cast<int>(i)).alive});
  }
  return out;
}

TrialResult run_test(const std::vector<BTNode>& population, const TrialSpec& spec, const GrammarSet& grammars) {
  validate_spec(spec);
  if (population.size() != spec.params.population)
    throw std::invalid_argument("population has " + std::to_string(population.size()) + " controllers, expected " +
                                std::to_string(spec.params.population));
  const auto& grammar = grammars.select(spec.condition);
  Rng rng(spec.seed);
  Rng world_rng = rng.split();

  World world = init_world(world_for(spec), spec.task, world_rng, population.size());
  std::vector<Learner> learners(population.size());
  for (std::size_t i = 0; i < population.size(); ++i) {
    learners[i].tree = population[i];
    learners[i].fitness.diversity = diversity_fitness(population[i], grammar);
  }
  return simulate(spec, grammar, learners, world, rng, false);
}

TrialResult run_test(const Archive& archive, const TrialSpec& spec, const GrammarSet& grammars) {
  if (archive.entries.empty()) throw std::invalid_argument("archive is empty");
  std::vector<BTNode> trees;
  trees.reserve(archive.entries.size());
  for (const auto& e : archive.entries) trees.push_back(build_tree(e.program));
  return run_test(trees, spec, grammars);
}

// --- archives -----------------------------------------------------------------------------

namespace {

json fitness_json(const FitnessRecord& f) {
  return {{"overall", f.overall},         {"diversity", f.diversity},         {"exploration", f.exploration},
          {"bt_feedback", f.bt_feedback}, {"prospective", f.prospective}, {"task_specific", f.task_specific}};
}

FitnessRecord fitness_from(const json& j) {
  FitnessRecord f;
  f.overall = j.value("overall", 0.0);
  f.diversity = j.value("diversity", 0.0);
  f.exploration = j.value("exploration", 0.0);
  f.bt_feedback = j.value("bt_feedback", 0.0);
  f.prospective = j.value("prospective", 0.0);
  f.task_specific = j.value("task_specific", 0.0);
  return f;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void save_archive(const Archive& archive, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json agents = json::array();
  for (const auto& e : archive.entries) {
    const std::string file = "agent_" + std::to_string(e.agent_id) + ".bt";
    std::ofstream(dir / file, std::ios::binary) << e.program << '\n';
    agents.push_back({{"id", e.agent_id},
                      {"file", file},
                      {"alive", e.alive},
                      {"fitness", fitness_json(e.fitness)},
                      {"genome", e.genome.codons}});
  }
  const json manifest = {{"task", std::string(to_string(archive.task))},
                         {"condition", archive.condition},
                         {"seed", archive.seed},
                         {"agents", agents}};
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  out << manifest.dump(1) << '\n';
  if (!out) throw std::runtime_error("cannot write archive to " + dir.string());
}

Archive load_archive(const std::filesystem::path& dir) {
  const json manifest = json::parse(read_file(dir / "manifest.json"));
  Archive a;
  const auto task = parse_task(manifest.at("task").get<std::string>());
  if (!task) throw std::runtime_error("archive manifest names an unknown task");
  a.task = *task;
  a.condition = manifest.value("condition", "");
  a.seed = manifest.value("seed", std::uint64_t{0});
  for (const auto& j : manifest.at("agents")) {
    ArchiveEntry e;
    e.agent_id = j.at("id").get<int>();
    e.program = read_file(dir / j.at("file").get<std::string>());
    while (!e.program.empty() && (e.program.back() == '\n' || e.program.back() == '\r')) e.program.pop_back();
    e.alive = j.value("alive", true);
    if (j.contains("fitness")) e.fitness = fitness_from(j.at("fitness"));
    if (j.contains("genome")) e.genome.codons = j.at("genome").get<std::vector<std::uint32_t>>();
    a.entries.push_back(std::move(e));
  }
  return a;
}

// --- fixed populations --------------------------------------------------------------------

namespace {

// Indices by fitness, best first; ties keep the lower agent id first.
std::vector<std::size_t> ranked(const Archive& archive) {
  std::vector<std::size_t> idx(archive.entries.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = archive.entries[a];
    const auto& y = archive.entries[b];
    if (x.fitness.overall != y.fitness.overall) return x.fitness.overall > y.fitness.overall;
    return x.agent_id < y.agent_id;
  });
  return idx;
}

std::vector<BTNode> top_trees(const Archive& archive, double n) {
  if (archive.entries.empty()) throw std::invalid_argument("archive is empty");
  if (!(n > 0.0 && n <= 1.0)) throw std::invalid_argument("n must lie in (0, 1]");
  const auto order = ranked(archive);
  const auto k = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::ceil(n * static_cast<double>(order.size()) - 1e-9)), 1, order.size());
  std::vector<BTNode> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(build_tree(archive.entries[order[i]].program));
  return out;
}

}  // namespace

std::vector<BTNode> build_homogeneous(const Archive& archive, std::size_t size) {
  auto best = top_trees(archive, 1.0 / static_cast<double>(std::max<std::size_t>(1, archive.entries.size())));
  return std::vector<BTNode>(size, best.front());
}

std::vector<BTNode> build_top_n(const Archive& archive, double n, std::size_t size) {
  const auto top = top_trees(archive, n);
  std::vector<BTNode> out;
  out.reserve(size);
  for (std::size_t i = 0; i < size; ++i) out.push_back(top[i % top.size()]);
  return out;
}

std::vector<BTNode> build_blended(const Archive& archive, double n, Rng& rng, std::size_t size) {
  const auto top = top_trees(archive, n);
  std::vector<BTNode> out;
  out.reserve(size);
  for (std::size_t i = 0; i < size; ++i) out.push_back(blend_agents(top, rng));
  return out;
}

std::map<std::size_t, std::size_t> ppa_histogram(const std::vector<Archive>& archives) {
  std::set<std::string> seen;
  std::map<std::size_t, std::size_t> h;
  for (const auto& a : archives)
    for (const auto& e : a.entries)
      if (seen.insert(e.program).second) ++h[count_ppa_subtrees(build_tree(e.program))];
  return h;
}

// --- statistics ---------------------------------------------------------------------------

namespace {

// Linear interpolation between order statistics (R type 7).
double quantile7(const std::vector<double>& sorted, double p) {
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

BoxStats box_stats(std::vector<double> v) {
  BoxStats s;
  s.count = v.size();
  if (v.empty()) return s;
  std::sort(v.begin(), v.end());
  s.min = v.front();
  s.max = v.back();
  s.q1 = quantile7(v, 0.25);
  s.median = quantile7(v, 0.5);
  s.q3 = quantile7(v, 0.75);
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  const double iqr = s.q3 - s.q1;
  const double lo = s.q1 - 1.5 * iqr;
  const double hi = s.q3 + 1.5 * iqr;
  s.whisker_low = *std::find_if(v.begin(), v.end(), [&](double x) { return x >= lo; });
  s.whisker_high = *std::find_if(v.rbegin(), v.rend(), [&](double x) { return x <= hi; });
  return s;
}

// --- batches --------------------------------------------------------------------------------

void parallel_for(std::size_t jobs, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(1, jobs));
  if (workers == 1) {
    for (std::size_t i = 0; i < jobs; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < jobs;) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = jobs;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::uint64_t trial_seed(std::uint64_t master_seed, Task task, std::size_t replicate) {
  return derive_seed(master_seed, {static_cast<std::uint64_t>(task), replicate});
}

std::vector<MatrixRow> condition_matrix(const std::vector<Task>& tasks, const std::vector<Condition>& conditions,
                                        std::size_t replicates, const TrialSpec& base, const GrammarSet& grammars,
                                        const MatrixOptions& options) {
  std::vector<MatrixRow> rows;
  if (!options.seeds.empty()) replicates = options.seeds.size();
  for (auto task : tasks)
    for (const auto& c : conditions)
      for (std::size_t r = 0; r < replicates; ++r) {
        MatrixRow row;
        row.task = task;
        row.condition = c;
        row.replicate = r;
        row.seed = options.seeds.empty() ? trial_seed(options.master_seed, task, r) : options.seeds[r];
        rows.push_back(std::move(row));
      }
  parallel_for(rows.size(), options.workers, [&](std::size_t i) {
    auto& row = rows[i];
    TrialSpec spec = base;
    spec.task = row.task;
    spec.mode = TrialMode::Learning;
    spec.condition = row.condition;
    spec.params.fitness_mode = row.condition.fitness;
    spec.seed = row.seed;
    auto outcome = run_learning(spec, grammars);
    row.result = std::move(outcome.result);
    if (options.keep_archives) row.archive = std::move(outcome.archive);
  });
  return rows;
}

std::vector<ConditionSummary> summarize(const std::vector<MatrixRow>& rows) {
  std::vector<ConditionSummary> out;
  std::vector<std::vector<double>> values;
  for (const auto& row : rows) {
    const auto label = row.condition.label();
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const ConditionSummary& s) { return s.task == row.task && s.condition == label; });
    if (it == out.end()) {
      out.push_back({row.task, label, {}, 0});
      values.emplace_back();
      it = out.end() - 1;
    }
    values[static_cast<std::size_t>(it - out.begin())].push_back(row.result.final_performance);
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i].performance = box_stats(values[i]);
    const auto wins = std::count_if(values[i].begin(), values[i].end(), is_success);
    out[i].success_rate = static_cast<double>(wins) / static_cast<double>(values[i].size());
  }
  return out;
}

std::vector<PopulationRow> population_study(const std::vector<Archive>& archives, const PopulationStudy& study,
                                            const TrialSpec& base, const GrammarSet& grammars,
                                            const MatrixOptions& options) {
  struct Job {
    PopulationRow row;
  };
  std::vector<Job> jobs;
  for (std::size_t a = 0; a < archives.size(); ++a)
    for (std::size_t s = 0; s < study.test_seeds; ++s) {
      if (study.homogeneous) jobs.push_back({{archives[a].task, "homogeneous", 0.0, a, s, 0}});
      for (double n : study.n_values) {
        if (study.top_n) jobs.push_back({{archives[a].task, "top_n", n, a, s, 0}});
        if (study.blended) jobs.push_back({{archives[a].task, "blended", n, a, s, 0}});
      }
    }

  parallel_for(jobs.size(), options.workers, [&](std::size_t i) {
    auto& row = jobs[i].row;
    const auto& archive = archives[row.archive];
    TrialSpec spec = base;
    spec.task = archive.task;
    spec.mode = TrialMode::Test;
    spec.params.population = study.population;
    spec.seed = derive_seed(options.master_seed, {static_cast<std::uint64_t>(archive.task), row.archive, row.test_seed});
    std::vector<BTNode> population;
    if (row.method == "homogeneous") {
      population = build_homogeneous(archive, study.population);
    } else if (row.method == "top_n") {
      population = build_top_n(archive, row.n, study.population);
    } else {
      Rng blend_rng(derive_seed(spec.seed, {0xB1E4D}));
      population = build_blended(archive, row.n, blend_rng, study.population);
    }
    row.performance = run_test(population, spec, grammars).final_performance;
  });

  std::vector<PopulationRow> out;
  out.reserve(jobs.size());
  for (auto& j : jobs) out.push_back(std::move(j.row));
  return out;
}

// --- outputs ----------------------------------------------------------------------------------

namespace {

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

}  // namespace

void write_series_csv(std::ostream& out, const TrialResult& result) {
  out << "step,performance,mean_fitness,max_fitness,alive\n";
  for (const auto& m : result.series)
    out << m.step << ',' << num(m.performance) << ',' << num(m.mean_fitness) << ',' << num(m.max_fitness) << ','
        << m.alive << '\n';
}

void write_results_csv(std::ostream& out, const std::vector<MatrixRow>& rows) {
  out << "task,condition,seed,step,performance,mean_fitness,alive\n";
  for (const auto& row : rows) {
    const auto label = row.condition.label();
    for (const auto& m : row.result.series)
      out << to_string(row.task) << ',' << label << ',' << row.seed << ',' << m.step << ',' << num(m.performance)
          << ',' << num(m.mean_fitness) << ',' << m.alive << '\n';
  }
}

void write_population_csv(std::ostream& out, const std::vector<PopulationRow>& rows) {
  out << "task,method,n,archive,test_seed,performance\n";
  for (const auto& r : rows)
    out << to_string(r.task) << ',' << r.method << ',' << num(r.n) << ',' << r.archive << ',' << r.test_seed << ','
        << num(r.performance) << '\n';
}

std::string summary_json(const std::vector<MatrixRow>& rows) {
  json conditions = json::array();
  for (const auto& s : summarize(rows)) {
    const auto& b = s.performance;
    conditions.push_back({{"task", std::string(to_string(s.task))},
                          {"condition", s.condition},
                          {"trials", b.count},
                          {"success_rate", s.success_rate},
                          {"performance",
                           {{"min", b.min},
                            {"q1", b.q1},
                            {"median", b.median},
                            {"q3", b.q3},
                            {"max", b.max},
                            {"whisker_low", b.whisker_low},
                            {"whisker_high", b.whisker_high},
                            {"mean", b.mean}}}});
  }
  json trials = json::array();
  for (const auto& row : rows) {
    json hist = json::object();
    for (auto [k, v] : row.result.ppa_histogram) hist[std::to_string(k)] = v;
    trials.push_back({{"task", std::string(to_string(row.task))},
                      {"condition", row.condition.label()},
                      {"replicate", row.replicate},
                      {"seed", row.seed},
                      {"final_performance", row.result.final_performance},
                      {"success", row.result.success},
                      {"adoptions", row.result.adoptions},
                      {"ppa_histogram", hist}});
  }
  return json{{"conditions", conditions}, {"trials", trials}}.dump(2);
}

}  // namespace betr
