#include "betr/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

namespace betr {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    auto item = trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (!item.empty()) out.push_back(std::move(item));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  const auto s = trim(text);
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw ConfigError(std::string(key) + ": cannot parse '" + std::string(text) + "'");
  return value;
}

std::string format(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string format(std::uint64_t x) { return std::to_string(x); }

std::vector<Disc> parse_discs(std::string_view key, std::string_view text) {
  std::vector<Disc> out;
  for (const auto& item : split(text, ';')) {
    const auto parts = split(item, ',');
    if (parts.size() != 3) throw ConfigError(std::string(key) + ": expected 'x,y,r' entries separated by ';'");
    out.push_back({parse_number<double>(key, parts[0]), parse_number<double>(key, parts[1]),
                   parse_number<double>(key, parts[2])});
  }
  return out;
}

std::string format_discs(const std::vector<Disc>& discs) {
  std::string out;
  for (const auto& d : discs) {
    if (!out.empty()) out += ';';
    out += format(d.x) + ',' + format(d.y) + ',' + format(d.radius);
  }
  return out;
}

template <class T, class Fmt>
std::string join(const std::vector<T>& items, Fmt fmt) {
  std::string out;
  for (const auto& x : items) {
    if (!out.empty()) out += ',';
    out += fmt(x);
  }
  return out;
}

struct Field {
  const char* key;
  std::function<void(RunConfig&, std::string_view key, std::string_view value)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T, class M>
Field number(const char* key, M member) {
  return {key, [member](RunConfig& c, std::string_view k, std::string_view v) { member(c) = parse_number<T>(k, v); },
          [member](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>)
              return format(static_cast<double>(member(const_cast<RunConfig&>(c))));
            else
              return format(static_cast<std::uint64_t>(member(const_cast<RunConfig&>(c))));
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = [] {
    std::vector<Field> f;
    // evolution
    f.push_back(number<std::size_t>("evolution.storage_threshold", [](RunConfig& c) -> auto& { return c.params.storage_threshold; }));
    f.push_back(number<double>("evolution.interaction_prob", [](RunConfig& c) -> auto& { return c.params.interaction_prob; }));
    f.push_back(number<double>("evolution.mutation_prob", [](RunConfig& c) -> auto& { return c.params.mutation_prob; }));
    f.push_back(number<double>("evolution.crossover_prob", [](RunConfig& c) -> auto& { return c.params.crossover_prob; }));
    f.push_back(number<int>("evolution.max_tree_depth", [](RunConfig& c) -> auto& { return c.params.max_tree_depth; }));
    f.push_back(number<std::size_t>("evolution.population", [](RunConfig& c) -> auto& { return c.params.population; }));
    f.push_back(number<std::size_t>("evolution.learning_steps", [](RunConfig& c) -> auto& { return c.params.learning_steps; }));
    f.push_back(number<double>("evolution.beta", [](RunConfig& c) -> auto& { return c.params.beta; }));
    f.push_back(number<std::size_t>("evolution.genome_length", [](RunConfig& c) -> auto& { return c.params.genome_length; }));
    f.push_back(number<std::size_t>("evolution.max_genome_length", [](RunConfig& c) -> auto& { return c.params.max_genome_length; }));
    f.push_back(number<int>("evolution.max_wraps", [](RunConfig& c) -> auto& { return c.params.max_wraps; }));
    f.push_back(number<double>("evolution.truncation_fraction", [](RunConfig& c) -> auto& { return c.params.truncation_fraction; }));
    f.push_back(number<double>("evolution.exploration_cap", [](RunConfig& c) -> auto& { return c.params.exploration_cap; }));
    // world
    f.push_back(number<int>("world.grid_half_extent", [](RunConfig& c) -> auto& { return c.world.grid_half_extent; }));
    f.push_back(number<double>("world.hub_radius", [](RunConfig& c) -> auto& { return c.world.hub_radius; }));
    f.push_back(number<double>("world.site_radius", [](RunConfig& c) -> auto& { return c.world.site_radius; }));
    f.push_back(number<double>("world.site_distance", [](RunConfig& c) -> auto& { return c.world.site_distance; }));
    f.push_back(number<double>("world.boundary_radius", [](RunConfig& c) -> auto& { return c.world.boundary_radius; }));
    f.push_back(number<double>("world.agent_speed", [](RunConfig& c) -> auto& { return c.world.agent_speed; }));
    f.push_back(number<int>("world.perception_range", [](RunConfig& c) -> auto& { return c.world.perception_range; }));
    f.push_back(number<std::size_t>("world.carry_capacity", [](RunConfig& c) -> auto& { return c.world.carry_capacity; }));
    f.push_back({"world.obstacles",
                 [](RunConfig& c, std::string_view k, std::string_view v) { c.world.obstacles = parse_discs(k, v); },
                 [](const RunConfig& c) { return format_discs(c.world.obstacles); }});
    f.push_back({"world.traps",
                 [](RunConfig& c, std::string_view k, std::string_view v) { c.world.traps = parse_discs(k, v); },
                 [](const RunConfig& c) { return format_discs(c.world.traps); }});
    // experiment
    f.push_back({"experiment.tasks",
                 [](RunConfig& c, std::string_view k, std::string_view v) {
                   c.tasks.clear();
                   for (const auto& t : split(v, ',')) {
                     const auto task = parse_task(t);
                     if (!task) throw ConfigError(std::string(k) + ": unknown task '" + t + "'");
                     c.tasks.push_back(*task);
                   }
                 },
                 [](const RunConfig& c) { return join(c.tasks, [](Task t) { return std::string(to_string(t)); }); }});
    f.push_back({"experiment.conditions",
                 [](RunConfig& c, std::string_view k, std::string_view v) {
                   c.conditions.clear();
                   for (const auto& label : split(v, ',')) {
                     if (label == "fig2") {
                       const auto all = fig2_conditions();
                       c.conditions.insert(c.conditions.end(), all.begin(), all.end());
                       continue;
                     }
                     try {
                       c.conditions.push_back(Condition::parse(label));
                     } catch (const std::invalid_argument& e) {
                       throw ConfigError(std::string(k) + ": " + e.what());
                     }
                   }
                 },
                 [](const RunConfig& c) { return join(c.conditions, [](const Condition& x) { return x.label(); }); }});
    f.push_back(number<std::size_t>("experiment.trials", [](RunConfig& c) -> auto& { return c.trials; }));
    f.push_back(number<std::uint64_t>("experiment.seed", [](RunConfig& c) -> auto& { return c.seed; }));
    f.push_back({"experiment.trial_seeds",
                 [](RunConfig& c, std::string_view k, std::string_view v) {
                   c.trial_seeds.clear();
                   for (const auto& s : split(v, ',')) c.trial_seeds.push_back(parse_number<std::uint64_t>(k, s));
                 },
                 [](const RunConfig& c) { return join(c.trial_seeds, [](std::uint64_t s) { return format(s); }); }});
    f.push_back(number<std::size_t>("experiment.workers", [](RunConfig& c) -> auto& { return c.workers; }));
    f.push_back(number<std::size_t>("experiment.record_interval", [](RunConfig& c) -> auto& { return c.record_interval; }));
    f.push_back(number<std::size_t>("experiment.test_steps", [](RunConfig& c) -> auto& { return c.test_steps; }));
    f.push_back({"experiment.ppa_grammar",
                 [](RunConfig& c, std::string_view, std::string_view v) { c.ppa_grammar = trim(v); },
                 [](const RunConfig& c) { return c.ppa_grammar; }});
    f.push_back({"experiment.nominal_grammar",
                 [](RunConfig& c, std::string_view, std::string_view v) { c.nominal_grammar = trim(v); },
                 [](const RunConfig& c) { return c.nominal_grammar; }});
    // fixed populations
    f.push_back({"fixed.method",
                 [](RunConfig& c, std::string_view k, std::string_view v) {
                   const auto m = trim(v);
                   if (m != "archive" && m != "homogeneous" && m != "top_n" && m != "blended")
                     throw ConfigError(std::string(k) + ": expected archive, homogeneous, top_n or blended");
                   c.fixed_method = m;
                 },
                 [](const RunConfig& c) { return c.fixed_method; }});
    f.push_back(number<double>("fixed.n", [](RunConfig& c) -> auto& { return c.fixed_n; }));
    f.push_back(number<std::size_t>("fixed.population", [](RunConfig& c) -> auto& { return c.fixed_population; }));
    // sweeps
    f.push_back({"sweep.study",
                 [](RunConfig& c, std::string_view k, std::string_view v) {
                   const auto s = trim(v);
                   if (s != "conditions" && s != "populations")
                     throw ConfigError(std::string(k) + ": expected conditions or populations");
                   c.sweep_study = s;
                 },
                 [](const RunConfig& c) { return c.sweep_study; }});
    f.push_back({"sweep.n_values",
                 [](RunConfig& c, std::string_view k, std::string_view v) {
                   c.sweep_n.clear();
                   for (const auto& s : split(v, ',')) c.sweep_n.push_back(parse_number<double>(k, s));
                 },
                 [](const RunConfig& c) { return join(c.sweep_n, [](double x) { return format(x); }); }});
    f.push_back(number<std::size_t>("sweep.test_seeds", [](RunConfig& c) -> auto& { return c.sweep_test_seeds; }));
    return f;
  }();
  return table;
}

const Field* find_field(std::string_view key) {
  for (const auto& f : fields())
    if (key == f.key) return &f;
  return nullptr;
}

}  // namespace

RunConfig preset_config(std::string_view name) {
  RunConfig c;
  if (name == "paper") {
    c.tasks = {Task::Foraging, Task::NestMaintenance};
    c.conditions = fig2_conditions();
    c.trials = 64;
    c.record_interval = 100;
  } else if (name == "desk") {
    c.params.population = 50;
    c.params.learning_steps = 3000;
    c.conditions = {Condition::parse("BeTr-PB+PPA-grammar:D+E+BT"), Condition::parse("BeTr-PB:D+E+adhoc"),
                    Condition::parse("PB:D+E+adhoc")};
    c.trials = 8;
    c.record_interval = 50;
  } else if (name == "smoke") {
    c.params.population = 20;
    c.params.learning_steps = 200;
    c.trials = 2;
    c.record_interval = 10;
    c.fixed_population = 20;
    c.sweep_n = {0.5, 1.0};
    c.sweep_test_seeds = 1;
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "' (expected paper, desk or smoke)");
  }
  return c;
}

void set_config_value(RunConfig& config, std::string_view key, std::string_view value) {
  const auto* f = find_field(trim(key));
  if (!f) throw ConfigError("unknown config key '" + std::string(key) + "'");
  f->set(config, f->key, value);
}

std::vector<std::pair<std::string, std::string>> config_values(const RunConfig& config) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : fields()) out.emplace_back(f.key, f.get(config));
  return out;
}

void load_config_file(RunConfig& config, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  if (path.extension() == ".json") {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
    if (!j.contains("config") || !j["config"].is_object())
      throw ConfigError(path.string() + ": manifest has no \"config\" object");
    for (const auto& [key, value] : j["config"].items()) {
      if (!value.is_string()) throw ConfigError(path.string() + ": value of " + key + " must be a string");
      set_config_value(config, key, value.get<std::string>());
    }
    return;
  }
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(path.string() + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [section, entries] : tree) {
    if (entries.empty()) throw ConfigError(path.string() + ": key '" + section + "' outside a section");
    for (const auto& [key, value] : entries) set_config_value(config, section + "." + key, value.data());
  }
}

void validate_config(const RunConfig& c) {
  try {
    c.params.validate();
    auto world = c.world;
    world.object_count = static_cast<int>(c.params.population);
    world.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (c.tasks.empty()) throw ConfigError("experiment.tasks is empty");
  if (c.conditions.empty()) throw ConfigError("experiment.conditions is empty");
  if (c.trials == 0 && c.trial_seeds.empty()) throw ConfigError("experiment.trials must be positive");
  if (c.workers == 0) throw ConfigError("experiment.workers must be >= 1");
  if (!(c.fixed_n > 0.0 && c.fixed_n <= 1.0)) throw ConfigError("fixed.n must lie in (0, 1]");
  if (c.fixed_population == 0) throw ConfigError("fixed.population must be positive");
  for (double n : c.sweep_n)
    if (!(n > 0.0 && n <= 1.0)) throw ConfigError("sweep.n_values must lie in (0, 1]");
}

std::string to_ini(const RunConfig& config) {
  std::ostringstream out;
  std::string section;
  for (const auto& [key, value] : config_values(config)) {
    const auto dot = key.find('.');
    const auto s = key.substr(0, dot);
    if (s != section) {
      if (!section.empty()) out << '\n';
      out << '[' << s << "]\n";
      section = s;
    }
    out << key.substr(dot + 1) << " = " << value << '\n';
  }
  return out.str();
}

}  // namespace betr
