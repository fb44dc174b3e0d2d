#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ssg/game.hpp"
#include "ssg/model.hpp"
#include "ssg/random.hpp"
#include "ssg/solver.hpp"

namespace ssg {

// Synthetic instance parameters. Defaults follow the simulation setup used
// for the 8-target experiments.
struct GenConfig {
  int target_count = 8;
  int features_per_target = 100;
  int train_games = 50;  // before the validation split is carved out
  int test_games = 50;
  int attacks_per_game = 5;
  std::optional<double> budget;  // defaults to 3|T|/8 (3 for 8 targets, 9 for 24)
  double w_coverage = -4.0;
  int value_net_hidden = 200;
  double validation_fraction = 0.2;
  std::uint64_t seed = 0;

  double resolved_budget() const;
  int validation_games() const;
  void validate() const;
};

struct Dataset {
  double w_coverage = -4.0;
  std::vector<SecurityGame> train;
  std::vector<SecurityGame> validation;
  std::vector<SecurityGame> test;
  std::optional<GenConfig> generator;

  // Train/validation games need coverage and counts, test games need an
  // evaluation attractiveness. Errors name the offending split and index.
  void validate() const;
};

// Ground-truth value networks used to generate an instance.
struct GroundTruth {
  ValueModel attacker;
  ValueModel defender;
};

struct GeneratedInstance {
  Dataset dataset;
  GroundTruth truth;
};

GeneratedInstance generate_instance(const GenConfig& config, const SolverConfig& solver = {});

// Tallies n categorical draws from q.
std::vector<std::int64_t> sample_attacks(const AttackDistribution& q, std::int64_t n, Rng& rng);

// Affine map of raw values onto [-10, 0] (min -> -10, max -> 0).
Vector rescale_defender_values(const Vector& raw);

std::string dataset_to_json(const Dataset& dataset);
Dataset dataset_from_json(const std::string& text);
void save_games(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_games(const std::filesystem::path& path);

}  // namespace ssg
