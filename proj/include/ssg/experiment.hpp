#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ssg/datagen.hpp"
#include "ssg/learning.hpp"
#include "ssg/solver.hpp"

namespace ssg {

enum class SweepParam { attacks_per_game, train_games, features_per_target };

std::string to_string(SweepParam param);
SweepParam parse_sweep_param(const std::string& name);

struct Sweep {
  SweepParam param = SweepParam::attacks_per_game;
  std::vector<int> values;
};

struct ExperimentSpec {
  GenConfig gen;  // gen.seed is replaced per trial
  TrainConfig train;  // train.seed is replaced per trial
  SolverConfig solver;
  int trials = 10;
  std::optional<Sweep> sweep;
  std::filesystem::path output_path = "results.csv";
  std::uint64_t seed = 0;
  int workers = 1;
  bool record_timings = false;

  void validate() const;
};

// Game instances depend on (root, trial) only, so sweep points over
// attacks/train games share test games. Training seeds also mix in the
// sweep value; 0 stands for "no sweep".
std::uint64_t trial_game_seed(std::uint64_t root, int trial);
std::uint64_t trial_training_seed(std::uint64_t game_seed, std::int64_t sweep_tag);

struct ResultRow {
  std::string sweep_param;  // "none" without a sweep
  std::int64_t sweep_value = 0;
  int trial = 0;
  std::string strategy;  // DF, 2S, Unif
  double mean_test_deu = 0.0;
  double median_test_deu = 0.0;
  std::optional<double> train_seconds;
  int solver_failures = 0;
  std::string error;  // nonempty for a failed trial
};

struct ExperimentResult {
  std::vector<ResultRow> rows;
  int failed_trials = 0;
  std::string summary;  // medians of DEU - Unif plus per-trial paired differences
};

// One trial: generate, train DF and 2S, evaluate DF, 2S and Unif on the
// test games. Rows come back in DF, 2S, Unif order.
std::vector<ResultRow> run_trial(const ExperimentSpec& spec, std::int64_t sweep_value, int trial);

ExperimentResult run_experiment(const ExperimentSpec& spec);

// Writes the CSV and the manifest next to it.
void write_results(const ExperimentSpec& spec, const ExperimentResult& result);

inline constexpr const char* kCsvHeader =
    "sweep_param,sweep_value,trial,strategy,mean_test_deu,median_test_deu,train_seconds,"
    "solver_failures";

std::string results_to_csv(const std::vector<ResultRow>& rows);
std::string manifest_json(const ExperimentSpec& spec);

// Shortest decimal that round-trips.
std::string format_double(double value);

// JSON config documents; keys mirror the CLI flags. Only keys present in the
// document are applied.
void apply_config_json(ExperimentSpec& spec, const std::string& text);
std::string spec_to_json(const ExperimentSpec& spec);

}  // namespace ssg
