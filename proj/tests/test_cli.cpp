#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "betr/cli.hpp"
#include "betr/config.hpp"

using namespace betr;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("betr_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// tiny runs: a few agents for a few steps
std::vector<std::string> tiny(std::vector<std::string> args) {
  for (const char* o : {"evolution.population=8", "evolution.learning_steps=40", "experiment.record_interval=10",
                        "fixed.population=8", "sweep.test_seeds=1"}) {
    args.push_back("--override");
    args.push_back(o);
  }
  return args;
}

}  // namespace

TEST(Config, PresetsAndDefaults) {
  const RunConfig d;
  EXPECT_EQ(d.params.population, 100u);
  EXPECT_EQ(d.params.learning_steps, 12000u);
  const auto paper = preset_config("paper");
  EXPECT_EQ(paper.trials, 64u);
  EXPECT_EQ(paper.conditions.size(), 9u);
  EXPECT_EQ(paper.tasks.size(), 2u);
  const auto desk = preset_config("desk");
  EXPECT_EQ(desk.params.population, 50u);
  EXPECT_EQ(desk.params.learning_steps, 3000u);
  EXPECT_EQ(desk.trials, 8u);
  EXPECT_THROW(preset_config("huge"), ConfigError);
}

TEST(Config, SetValues) {
  RunConfig c;
  set_config_value(c, "evolution.beta", "0.75");
  EXPECT_DOUBLE_EQ(c.params.beta, 0.75);
  set_config_value(c, "experiment.tasks", "foraging,nest_maintenance");
  EXPECT_EQ(c.tasks.size(), 2u);
  set_config_value(c, "experiment.conditions", "fig2");
  EXPECT_EQ(c.conditions.size(), 9u);
  set_config_value(c, "world.obstacles", "1,2,3;4,5,6");
  ASSERT_EQ(c.world.obstacles.size(), 2u);
  EXPECT_DOUBLE_EQ(c.world.obstacles[1].radius, 6);
  EXPECT_THROW(set_config_value(c, "evolution.nope", "1"), ConfigError);
  EXPECT_THROW(set_config_value(c, "evolution.population", "many"), ConfigError);
  EXPECT_THROW(set_config_value(c, "experiment.tasks", "farming"), ConfigError);
  EXPECT_THROW(set_config_value(c, "experiment.conditions", "PB:Q"), ConfigError);
}

TEST(Config, ValuesRoundTrip) {
  auto c = preset_config("desk");
  set_config_value(c, "evolution.beta", "0.1");  // not exactly representable
  set_config_value(c, "world.traps", "-10,10,2.5");
  set_config_value(c, "experiment.trial_seeds", "5,6,7");
  RunConfig back;
  for (const auto& [k, v] : config_values(c)) set_config_value(back, k, v);
  EXPECT_EQ(config_values(back), config_values(c));
  EXPECT_EQ(back.params.beta, c.params.beta);

  const auto dir = scratch("ini");
  fs::create_directories(dir);
  {
    std::ofstream(dir / "run.cfg") << to_ini(c);
  }
  RunConfig from_file;
  load_config_file(from_file, dir / "run.cfg");
  EXPECT_EQ(config_values(from_file), config_values(c));
  fs::remove_all(dir);
}

TEST(Config, FileErrors) {
  RunConfig c;
  EXPECT_THROW(load_config_file(c, "/nonexistent/x.cfg"), ConfigError);
  const auto dir = scratch("bad");
  fs::create_directories(dir);
  {
    std::ofstream(dir / "bad.cfg") << "[evolution]\nbeta = lots\n";
  }
  EXPECT_THROW(load_config_file(c, dir / "bad.cfg"), ConfigError);
  {
    std::ofstream(dir / "bad.json") << "{\"tool\": \"betr\"}";
  }
  EXPECT_THROW(load_config_file(c, dir / "bad.json"), ConfigError);
  fs::remove_all(dir);
  RunConfig v;
  v.workers = 0;
  EXPECT_THROW(validate_config(v), ConfigError);
}

TEST(ShippedConfigs, Load) {
  for (const char* f : {"configs/default.cfg", "configs/paper_fig2.cfg", "configs/desk.cfg", "configs/smoke.cfg"}) {
    RunConfig c;
    EXPECT_NO_THROW(load_config_file(c, f)) << f;
    EXPECT_NO_THROW(validate_config(c)) << f;
  }
  RunConfig paper;
  load_config_file(paper, "configs/paper_fig2.cfg");
  EXPECT_EQ(config_values(paper), config_values(preset_config("paper")));
}

TEST(Cli, ParseErrorsExitOne) {
  EXPECT_EQ(cli({}).code, 1);
  EXPECT_EQ(cli({"fly"}).code, 1);
  EXPECT_EQ(cli({"learn", "--bogus"}).code, 1);
  EXPECT_EQ(cli({"test"}).code, 1);  // archive argument required
  const auto help = cli({"--help"});
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("learn"), std::string::npos);
  EXPECT_EQ(cli({"--version"}).out, std::string(kToolVersion) + "\n");
}

TEST(Cli, ConfigErrorsExitOne) {
  const auto out = scratch("cfgerr");
  EXPECT_EQ(cli({"learn", "--out", out.string(), "--override", "evolution.nope=1"}).code, 1);
  EXPECT_EQ(cli({"learn", "--out", out.string(), "--override", "novalue"}).code, 1);
  EXPECT_EQ(cli({"learn", "--out", out.string(), "--preset", "huge"}).code, 1);
  EXPECT_EQ(cli({"learn", "--out", out.string(), "--config", "/nonexistent.cfg"}).code, 1);
  const auto missing = cli({"learn", "--out", out.string(), "--override", "experiment.ppa_grammar=/no/such/ppa.bnf"});
  EXPECT_EQ(missing.code, 1);
  EXPECT_NE(missing.err.find("/no/such/ppa.bnf"), std::string::npos);
}

TEST(Cli, RuntimeErrorsExitTwo) {
  const auto dir = scratch("rt");
  fs::create_directories(dir);
  {
    std::ofstream(dir / "broken.bt") << "[Sequence][Act]Explore[/Act]";
  }
  EXPECT_EQ(cli({"inspect", (dir / "broken.bt").string()}).code, 2);
  EXPECT_EQ(cli({"test", (dir / "no_archive").string(), "--out", (dir / "o").string()}).code, 2);
  EXPECT_EQ(cli({"plotdata", dir.string(), "--out", (dir / "o").string()}).code, 2);
  fs::remove_all(dir);
}

TEST(Cli, LearnInspectAndManifestRerun) {
  const auto a = scratch("learn_a"), b = scratch("learn_b");
  const auto first = cli(tiny({"learn", "--seed", "3", "--out", a.string()}));
  ASSERT_EQ(first.code, 0) << first.err;
  for (const char* f : {"series.csv", "result.json", "manifest.json", "archive/manifest.json", "archive/agent_0.bt"})
    EXPECT_TRUE(fs::exists(a / f)) << f;

  const auto manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
  EXPECT_EQ(manifest.at("tool"), "betr");
  EXPECT_EQ(manifest.at("version"), kToolVersion);
  EXPECT_EQ(manifest.at("command"), "learn");
  EXPECT_EQ(manifest.at("config").at("evolution.population"), "8");
  EXPECT_EQ(manifest.at("config").at("experiment.seed"), "3");

  const auto rerun = cli({"learn", "--config", (a / "manifest.json").string(), "--out", b.string()});
  ASSERT_EQ(rerun.code, 0) << rerun.err;
  EXPECT_EQ(slurp(a / "series.csv"), slurp(b / "series.csv"));
  EXPECT_EQ(slurp(a / "archive" / "manifest.json"), slurp(b / "archive" / "manifest.json"));

  const auto shown = cli({"inspect", (a / "archive" / "agent_0.bt").string()});
  EXPECT_EQ(shown.code, 0);
  EXPECT_NE(shown.out.find("PPA subtrees: "), std::string::npos);

  const auto tested = cli(tiny({"test", (a / "archive").string(), "--trials", "2", "--out", (a / "test").string(),
                                "--override", "fixed.method=blended"}));
  ASSERT_EQ(tested.code, 0) << tested.err;
  const auto table = slurp(a / "test" / "test.csv");
  EXPECT_EQ(std::count(table.begin(), table.end(), '\n'), 3);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Cli, SweepAndPlotdata) {
  const auto dir = scratch("sweep");
  const auto sweep = cli(tiny({"sweep", "--trials", "2", "--workers", "2", "--out", dir.string(), "--condition",
                               "PB:D+E+adhoc,BeTr-PB+PPA-grammar:D+E+BT", "--task", "foraging,nest_maintenance"}));
  ASSERT_EQ(sweep.code, 0) << sweep.err;
  EXPECT_TRUE(fs::exists(dir / "results.csv"));
  EXPECT_TRUE(fs::exists(dir / "summary.json"));
  EXPECT_TRUE(fs::exists(dir / "archives" / "foraging" / "PB_D_E_adhoc" / "r1" / "manifest.json"));

  const auto pop = cli(tiny({"sweep", "--out", (dir / "pop").string(), "--override", "sweep.study=populations",
                             "--override", "sweep.n_values=0.5,1",
                             (dir / "archives" / "foraging" / "BeTr-PB_PPA-grammar_D_E_BT" / "r0").string()}));
  ASSERT_EQ(pop.code, 0) << pop.err;
  EXPECT_TRUE(fs::exists(dir / "pop" / "population.csv"));

  const auto plot = cli({"plotdata", dir.string(), "--out", (dir / "plots").string()});
  ASSERT_EQ(plot.code, 0) << plot.err;
  const auto fig2a = slurp(dir / "plots" / "fig2a.csv");
  EXPECT_EQ(fig2a.substr(0, fig2a.find('\n')),
            "condition,trials,min,q1,median,q3,max,whisker_low,whisker_high,mean,success_rate");
  EXPECT_EQ(std::count(fig2a.begin(), fig2a.end(), '\n'), 3);
  EXPECT_TRUE(fs::exists(dir / "plots" / "fig2b.csv"));

  ASSERT_EQ(cli({"plotdata", (dir / "pop").string(), "--out", (dir / "plots").string()}).code, 0);
  const auto fig3 = slurp(dir / "plots" / "fig3.csv");
  EXPECT_EQ(fig3.substr(0, fig3.find('\n')), "task,method,n,count,min,q1,median,q3,max,whisker_low,whisker_high,mean");
  fs::remove_all(dir);
}
