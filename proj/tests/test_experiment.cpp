#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ssg/errors.hpp"
#include "ssg/experiment.hpp"
#include "ssg/model.hpp"

using namespace ssg;
namespace fs = std::filesystem;

namespace {

ExperimentSpec tiny_spec() {
  ExperimentSpec spec;
  spec.gen.target_count = 4;
  spec.gen.features_per_target = 4;
  spec.gen.train_games = 5;
  spec.gen.test_games = 4;
  spec.gen.attacks_per_game = 10;
  spec.gen.value_net_hidden = 8;
  spec.train.epochs = 3;
  spec.train.hidden_dim = 6;
  spec.solver.restarts = 3;
  spec.trials = 2;
  spec.seed = 17;
  return spec;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "ssg_experiment_tests";
  fs::create_directories(dir);
  return dir / name;
}

struct CommandResult {
  int exit_code = -1;
  std::string output;
};

CommandResult run_cli(const std::string& args) {
  const fs::path log = scratch("cli_output.txt");
  const std::string command = std::string(SSGDF_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(command.c_str());
  CommandResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.output = slurp(log);
  return r;
}

std::string line_value(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) {
    if (line.rfind(key + " ", 0) == 0) return line.substr(key.size() + 1);
  }
  return "";
}

}  // namespace

TEST(Experiment, SmokeRunProducesThreeRows) {
  ExperimentSpec spec = tiny_spec();
  spec.gen.target_count = 2;
  spec.gen.budget = 1.0;
  spec.trials = 1;
  const ExperimentResult r = run_experiment(spec);
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_EQ(r.rows[0].strategy, "DF");
  EXPECT_EQ(r.rows[1].strategy, "2S");
  EXPECT_EQ(r.rows[2].strategy, "Unif");
  EXPECT_EQ(r.rows[0].sweep_param, "none");
  EXPECT_EQ(r.failed_trials, 0);
  EXPECT_NE(r.summary.find("per-trial DF - 2S"), std::string::npos);
}

TEST(Experiment, UniformRowsShareGamesAcrossSweepPoints) {
  for (SweepParam param : {SweepParam::attacks_per_game, SweepParam::train_games}) {
    ExperimentSpec spec = tiny_spec();
    spec.sweep = Sweep{param, {3, 6, 9}};
    const ExperimentResult r = run_experiment(spec);
    ASSERT_EQ(r.rows.size(), 3u * 2u * 3u);
    for (const auto& row : r.rows) {
      if (row.strategy != "Unif") continue;
      const auto& ref = r.rows[static_cast<std::size_t>(row.trial) * 3 + 2];
      EXPECT_EQ(row.mean_test_deu, ref.mean_test_deu) << to_string(param);
      EXPECT_EQ(row.median_test_deu, ref.median_test_deu);
    }
    // Rows are ordered by sweep value, trial, strategy.
    EXPECT_EQ(r.rows[6].sweep_value, 6);
    EXPECT_EQ(r.rows[9].trial, 1);
  }
}

TEST(Experiment, CsvIsByteIdenticalAcrossRunsAndWorkerCounts) {
  ExperimentSpec spec = tiny_spec();
  spec.sweep = Sweep{SweepParam::attacks_per_game, {5, 10}};
  const std::string a = results_to_csv(run_experiment(spec).rows);
  spec.workers = 3;
  const std::string b = results_to_csv(run_experiment(spec).rows);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.substr(0, a.find('\n')), kCsvHeader);
  EXPECT_NE(a.find(",NA,"), std::string::npos);  // no timings by default
}

TEST(Experiment, TimingsOnlyWhenRequested) {
  ExperimentSpec spec = tiny_spec();
  spec.trials = 1;
  spec.record_timings = true;
  const ExperimentResult r = run_experiment(spec);
  EXPECT_TRUE(r.rows[0].train_seconds.has_value());
}

TEST(Experiment, ErrorRowsUseNA) {
  ResultRow row;
  row.sweep_param = "none";
  row.strategy = "DF";
  row.mean_test_deu = std::nan("");
  row.median_test_deu = std::nan("");
  row.error = "boom";
  const std::string csv = results_to_csv({row});
  EXPECT_NE(csv.find("none,0,0,DF,NA,NA,NA,NA"), std::string::npos);
}

TEST(Experiment, ManifestAndConfigRoundTrip) {
  ExperimentSpec spec = tiny_spec();
  spec.sweep = Sweep{SweepParam::features_per_target, {2, 4}};
  spec.output_path = scratch("results.csv");
  const ExperimentResult r = run_experiment(spec);
  write_results(spec, r);
  const std::string manifest = slurp(scratch("results.csv.manifest.json"));
  EXPECT_NE(manifest.find("\"schema_versions\""), std::string::npos);
  EXPECT_NE(manifest.find("\"stationarity_tolerance\""), std::string::npos);
  EXPECT_NE(manifest.find("\"budget\": 1.5"), std::string::npos);
  EXPECT_EQ(slurp(spec.output_path), results_to_csv(r.rows));

  ExperimentSpec copy;
  apply_config_json(copy, spec_to_json(spec));
  EXPECT_EQ(spec_to_json(copy), spec_to_json(spec));
  EXPECT_THROW(apply_config_json(copy, "{\"trials\": \"many\"}"), ParseError);
  EXPECT_THROW(apply_config_json(copy, "{\"sweep\": {\"param\": \"budget\", \"values\": [1]}}"),
               InvalidArgument);
}

TEST(Experiment, SpecValidation) {
  ExperimentSpec spec = tiny_spec();
  spec.trials = 0;
  EXPECT_THROW(spec.validate(), InvalidArgument);
  spec = tiny_spec();
  spec.sweep = Sweep{SweepParam::attacks_per_game, {5, 0}};
  EXPECT_THROW(spec.validate(), InvalidArgument);
  EXPECT_THROW(parse_sweep_param("budget"), InvalidArgument);
}

TEST(Experiment, FormatDoubleRoundTrips) {
  for (double x : {0.1, -1.0 / 3.0, 1e-300, 123456.789, -0.0}) {
    EXPECT_EQ(std::stod(format_double(x)), x);
  }
  EXPECT_EQ(format_double(std::nan("")), "NA");
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run_cli("").exit_code, 1);
  EXPECT_EQ(run_cli("frobnicate").exit_code, 1);
  EXPECT_EQ(run_cli("run --trials zero").exit_code, 1);
  EXPECT_EQ(run_cli("run --trials 0").exit_code, 1);
  const CommandResult verify = run_cli("verify-theory");
  EXPECT_EQ(verify.exit_code, 0) << verify.output;
  EXPECT_NE(verify.output.find("PASS theorem1.worked_example"), std::string::npos);
}

TEST(Cli, PipelineMatchesRunColumns) {
  const std::string common =
      " --targets 4 --features 4 --train-games 5 --test-games 4 --attacks 10 --value-net-hidden 8"
      " --restarts 3";
  const std::string train_flags = " --epochs 3 --hidden 6";
  const fs::path games = scratch("games.json"), model = scratch("model.json"),
                 csv = scratch("cli_results.csv");
  ASSERT_EQ(run_cli("run --seed 17 --trials 2 --output " + csv.string() + common + train_flags)
                .exit_code,
            0);
  ASSERT_EQ(run_cli("gen --seed 17 --trial 1 --out " + games.string() + common).exit_code, 0);
  ASSERT_EQ(run_cli("train --games " + games.string() + " --method 2s --out " + model.string() +
                    train_flags + " --restarts 3")
                .exit_code,
            0);
  const CommandResult eval_model =
      run_cli("eval --games " + games.string() + " --model " + model.string() + " --restarts 3");
  const CommandResult eval_unif = run_cli("eval --games " + games.string() + " --uniform --restarts 3");
  ASSERT_EQ(eval_model.exit_code, 0) << eval_model.output;

  const std::string results = slurp(csv);
  std::string two_stage_row, unif_row;
  std::istringstream in(results);
  for (std::string line; std::getline(in, line);) {
    if (line.rfind("none,0,1,2S,", 0) == 0) two_stage_row = line;
    if (line.rfind("none,0,1,Unif,", 0) == 0) unif_row = line;
  }
  ASSERT_FALSE(two_stage_row.empty());
  EXPECT_EQ(two_stage_row.substr(12, two_stage_row.find(',', 12) - 12),
            line_value(eval_model.output, "mean_test_deu"));
  EXPECT_EQ(unif_row.substr(14, unif_row.find(',', 14) - 14),
            line_value(eval_unif.output, "mean_test_deu"));

  // A checkpoint with zero output weights plans like Unif.
  std::string text = slurp(model);
  ValueModel zero = model_from_json(text);
  zero.weights_out.setZero();
  zero.bias_out = 0.0;
  save_model(zero, model);
  const CommandResult eval_zero =
      run_cli("eval --games " + games.string() + " --model " + model.string() + " --restarts 3");
  EXPECT_EQ(line_value(eval_zero.output, "mean_test_deu"), line_value(eval_unif.output, "mean_test_deu"));
}

TEST(Cli, TrainRejectsGamesWithoutAttackCounts) {
  std::string text = slurp(fs::path(SSG_TEST_DATA_DIR) / "two_target_games.json");
  const std::string field = ",\n      \"attack_counts\": [3, 1]";
  text.erase(text.find(field), field.size());
  const fs::path bad = scratch("bad_games.json");
  std::ofstream(bad) << text;
  const CommandResult r = run_cli("train --games " + bad.string() + " --out " + scratch("m.json").string());
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.output.find("games[0].attack_counts"), std::string::npos) << r.output;
}

TEST(Cli, ConfigFileOverridesFlags) {
  const fs::path config = scratch("config.json");
  std::ofstream(config) << "{\"trials\": 1, \"gen\": {\"target_count\": 3, \"train_games\": 3,"
                           " \"test_games\": 2, \"features_per_target\": 2, \"value_net_hidden\": 4},"
                           " \"train\": {\"epochs\": 1, \"hidden_dim\": 3}}";
  const fs::path csv = scratch("config_results.csv");
  const CommandResult r =
      run_cli("run --trials 5 --output " + csv.string() + " --config " + config.string());
  ASSERT_EQ(r.exit_code, 0) << r.output;
  const std::string results = slurp(csv);
  EXPECT_EQ(std::count(results.begin(), results.end(), '\n'), 4);  // header + 3 rows
  const std::string manifest = slurp(scratch("config_results.csv.manifest.json"));
  EXPECT_NE(manifest.find("\"target_count\": 3"), std::string::npos);
}
