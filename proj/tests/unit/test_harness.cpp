#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "avgopt/commands.hpp"
#include "avgopt/config.hpp"
#include "avgopt/harness.hpp"

using namespace avgopt;

namespace {

ExperimentConfig small_config(const std::string& algorithm = "inter_dql") {
  ExperimentConfig c;
  c.algorithm.name = algorithm;
  c.execution.steps = 4000;
  c.execution.runs = 3;
  c.execution.window = 500;
  c.execution.snapshot_every = 1000;
  return c;
}

std::string temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("avgopt_test_" + name);
  std::filesystem::remove_all(dir);
  return dir.string();
}

}  // namespace

TEST(RewardRateCurve, Windows) {
  EXPECT_EQ(reward_rate_curve({0, 0, 1, 0, 0, 1}, 3), (std::vector<double>{1.0 / 3, 1.0 / 3}));
  EXPECT_EQ(reward_rate_curve({1, 1, 1, 1, 1}, 2), (std::vector<double>{1.0, 1.0}));
  EXPECT_TRUE(reward_rate_curve({1, 1}, 3).empty());
}

TEST(MeanAndStderr, KnownValues) {
  const auto [m, se] = mean_and_stderr({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(m, 2.5);
  EXPECT_NEAR(se, std::sqrt(5.0 / 3.0) / 2.0, 1e-12);
  EXPECT_EQ(mean_and_stderr({2.0}).second, 0.0);
}

TEST(Config, JsonRoundTrip) {
  ExperimentConfig c = small_config("intra_dqe");
  c.env.goal = Goal::G3;
  c.params.alpha = 0.25;
  c.params.schedule = StepsizeSchedule::one_over_visits;
  c.params.ties = TieBreak::random;
  c.sweep.alpha = {0.5, 0.125};
  c.algorithm.interrupt = true;
  EXPECT_EQ(config_from_json(to_json(c)), c);
}

TEST(Config, UnknownFieldIsNamed) {
  try {
    config_from_json(R"({"params": {"alpah": 0.1}})");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("params.alpah"), std::string::npos);
  }
}

TEST(Config, TypeAndRangeErrors) {
  EXPECT_THROW(config_from_json(R"({"execution": {"steps": -3}})"), ConfigError);
  EXPECT_THROW(config_from_json(R"({"params": {"alpha": "big"}})"), ConfigError);
  EXPECT_THROW(config_from_json(R"({"params": {"alpha": 0}})"), ConfigError);
  EXPECT_THROW(config_from_json(R"({"env": {"goal": "G9"}})"), ConfigError);
  EXPECT_THROW(config_from_json(R"({"algorithm": {"name": "sarsa"}})"), ConfigError);
  EXPECT_THROW(config_from_json("not json"), ConfigError);
}

TEST(Config, Overrides) {
  ExperimentConfig c;
  apply_override(c, "params.alpha=0.5");
  apply_override(c, "env.goal=G2");
  apply_override(c, "algorithm.name=intra_dql");
  apply_override(c, "sweep.alpha=[0.5,0.25]");
  EXPECT_EQ(c.params.alpha, 0.5);
  EXPECT_EQ(c.env.goal, Goal::G2);
  EXPECT_EQ(c.algorithm.name, "intra_dql");
  EXPECT_EQ(c.sweep.alpha, (std::vector<double>{0.5, 0.25}));
  EXPECT_THROW(apply_override(c, "params.gamma=1"), ConfigError);
  EXPECT_THROW(apply_override(c, "novalue"), ConfigError);
}

TEST(Config, FileRoundTrip) {
  const std::string dir = temp_dir("config");
  std::filesystem::create_directories(dir);
  const ExperimentConfig c = small_config("gosavi");
  write_config(c, dir + "/c.json");
  EXPECT_EQ(read_config(dir + "/c.json"), c);
  EXPECT_THROW(read_config(dir + "/missing.json"), ConfigError);
}

TEST(Harness, SameSeedSameResults) {
  const ExperimentConfig c = small_config();
  const auto ctx = ExperimentContext::build(c);
  const auto a = run_single(ctx, c, 1);
  const auto b = run_single(ctx, c, 1);
  EXPECT_EQ(a.seed, 1u);
  EXPECT_EQ(a.final_q, b.final_q);
  EXPECT_EQ(a.final_rbar, b.final_rbar);
  EXPECT_EQ(a.series.size(), 4u);
  EXPECT_TRUE(a.series.back().greedy_rate.has_value());
}

TEST(Harness, JobsDoNotChangeResults) {
  ExperimentConfig c = small_config("intra_dql");
  c.execution.runs = 4;
  const auto serial = run_experiment(c);
  c.execution.jobs = 4;
  const auto parallel = run_experiment(c);
  ASSERT_EQ(serial.size(), parallel.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    EXPECT_EQ(serial[i].run_id, i);
    EXPECT_EQ(serial[i].final_q, parallel[i].final_q);
  }
}

TEST(Harness, EveryAlgorithmRuns) {
  for (auto name : algorithm_names()) {
    ExperimentConfig c = small_config(std::string(name));
    c.execution.runs = 1;
    c.execution.steps = 1000;
    c.execution.window = 100;
    c.algorithm.planning_steps = 2;
    if (name == "intra_dql" || name == "intra_dqe" || name == "model_learning")
      c.algorithm.behavior = "uniform_primitive";
    if (name == "combined") c.params.beta = 0.1;
    const auto recs = run_experiment(c);
    ASSERT_EQ(recs.size(), 1u) << name;
    EXPECT_FALSE(recs[0].series.empty()) << name;
    if (name == "model_learning") EXPECT_TRUE(recs[0].model_error.has_value());
  }
}

TEST(Harness, FinalWindowRate) {
  RunRecord rec;
  for (int i = 0; i < 20; ++i) rec.series.push_back({static_cast<std::size_t>(i), i < 18 ? 0.0 : 1.0, 0.0, {}});
  EXPECT_DOUBLE_EQ(final_window_rate(rec), 1.0);
  rec.series.resize(3);
  EXPECT_DOUBLE_EQ(final_window_rate(rec), 0.0);
}

TEST(Harness, ResultsCsvHeaderOnlyForNoRecords) {
  std::ostringstream os;
  write_results({}, os);
  EXPECT_EQ(os.str(), "run_id,seed,step,window_rate,rbar,greedy_rate\n");
}

TEST(Harness, SweepGrid) {
  ExperimentConfig c = small_config();
  c.execution.runs = 1;
  c.execution.steps = 500;
  c.execution.window = 100;
  c.execution.eval_greedy = false;
  c.sweep.alpha = {0.5, 0.25, 0.125, 0.0625, 0.03125};
  c.sweep.beta = {0.5, 0.25, 0.125, 0.0625, 0.03125};
  const auto points = sweep(c);
  ASSERT_EQ(points.size(), 25u);
  EXPECT_EQ(points[0].alpha, 0.5);
  EXPECT_EQ(points[1].beta, 0.25);
  EXPECT_EQ(points[5].alpha, 0.25);
  std::ostringstream os;
  write_sweep_summary(points, os);
  const std::string text = os.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 26);
}

TEST(Commands, SolveWritesArtifacts) {
  const std::string dir = temp_dir("solve");
  const auto res = run_command("solve", ExperimentConfig{}, dir, nullptr);
  EXPECT_NE(res.summary.find("r* = 0.062500"), std::string::npos) << res.summary;
  for (const char* f : {"config.json", "models.csv", "q_star.csv", "solution.json", "manifest.json", "summary.txt"})
    EXPECT_TRUE(std::filesystem::exists(dir + "/" + f)) << f;
}

TEST(Commands, RejectsMismatchedAlgorithm) {
  ExperimentConfig c = small_config("combined");
  EXPECT_THROW(run_command("learn", c, temp_dir("mismatch"), nullptr), UsageError);
  EXPECT_THROW(run_command("plan", small_config(), temp_dir("mismatch"), nullptr), UsageError);
  EXPECT_THROW(run_command("fly", small_config(), temp_dir("mismatch"), nullptr), UsageError);
}
