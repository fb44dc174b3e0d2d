#include "ssg/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json_util.hpp"
#include "ssg/errors.hpp"

namespace ssg {

namespace {

constexpr int kGamesVersion = 1;
constexpr const char* kGamesFormat = "ssg-games";

// Stream tags for derive_seed.
enum : std::uint64_t {
  kAttackerNet = 1,
  kDefenderNet = 2,
  kTrainGame = 3,
  kTestGame = 4,
  kSplit = 5,
};

Matrix sample_features(int targets, int features, Rng& rng) {
  Matrix y(targets, features);
  for (int t = 0; t < targets; ++t) {
    for (int f = 0; f < features; ++f) y(t, f) = rng.uniform(-10.0, 10.0);
  }
  return y;
}

SecurityGame base_game(const GenConfig& config, const GroundTruth& truth, Rng& rng) {
  SecurityGame game;
  game.features = sample_features(config.target_count, config.features_per_target, rng);
  game.defender_values = rescale_defender_values(forward_raw(truth.defender, game.features));
  game.budget = config.resolved_budget();
  game.true_phi = forward(truth.attacker, game.features);
  return game;
}

std::string game_where(std::size_t index) { return "games[" + std::to_string(index) + "]"; }

detail::Json gen_config_to_json(const GenConfig& c) {
  detail::Json j;
  j["target_count"] = c.target_count;
  j["features_per_target"] = c.features_per_target;
  j["train_games"] = c.train_games;
  j["test_games"] = c.test_games;
  j["attacks_per_game"] = c.attacks_per_game;
  j["budget"] = c.resolved_budget();
  j["w_coverage"] = c.w_coverage;
  j["value_net_hidden"] = c.value_net_hidden;
  j["validation_fraction"] = c.validation_fraction;
  j["seed"] = c.seed;
  return j;
}

GenConfig gen_config_from_json(const detail::Json& j) {
  const std::string where = "generator";
  auto integer = [&](const char* key) {
    const auto& v = detail::require(j, key, where);
    if (!v.is_number_integer()) throw ParseError(where + "." + key, 0, "expected an integer");
    return v.get<int>();
  };
  GenConfig c;
  c.target_count = integer("target_count");
  c.features_per_target = integer("features_per_target");
  c.train_games = integer("train_games");
  c.test_games = integer("test_games");
  c.attacks_per_game = integer("attacks_per_game");
  c.budget = detail::as_double(detail::require(j, "budget", where), where + ".budget");
  c.w_coverage = detail::as_double(detail::require(j, "w_coverage", where), where + ".w_coverage");
  c.value_net_hidden = integer("value_net_hidden");
  c.validation_fraction = detail::as_double(detail::require(j, "validation_fraction", where),
                                            where + ".validation_fraction");
  const auto& seed = detail::require(j, "seed", where);
  if (!seed.is_number_unsigned() && !seed.is_number_integer()) {
    throw ParseError(where + ".seed", 0, "expected an integer");
  }
  c.seed = seed.get<std::uint64_t>();
  return c;
}

detail::Json game_to_json(const SecurityGame& game, const char* split) {
  detail::Json j;
  j["split"] = split;
  j["targets"] = game.target_count();
  j["budget"] = game.budget;
  j["features"] = detail::matrix_to_json(game.features);
  j["defender_values"] = detail::vector_to_json(game.defender_values);
  if (game.historical_coverage) {
    j["historical_coverage"] = detail::vector_to_json(game.historical_coverage->values());
  }
  if (game.attack_counts) j["attack_counts"] = *game.attack_counts;
  if (game.true_phi) j["true_phi"] = detail::vector_to_json(game.true_phi->values());
  return j;
}

SecurityGame game_from_json(const detail::Json& j, const std::string& where) {
  SecurityGame game;
  const auto& targets_json = detail::require(j, "targets", where);
  if (!targets_json.is_number_integer() || targets_json.get<long long>() <= 0) {
    throw ParseError(where + ".targets", 0, "expected a positive integer");
  }
  const auto targets = targets_json.get<Eigen::Index>();
  game.budget = detail::as_double(detail::require(j, "budget", where), where + ".budget");
  game.features = detail::matrix_from_json(detail::require(j, "features", where), where + ".features");
  game.defender_values = detail::vector_from_json(detail::require(j, "defender_values", where),
                                                  where + ".defender_values");
  if (game.features.rows() != targets) {
    throw ParseError(where + ".features", 0, "expected " + std::to_string(targets) + " rows");
  }
  if (game.defender_values.size() != targets) {
    throw ParseError(where + ".defender_values", 0,
                     "expected " + std::to_string(targets) + " entries");
  }
  try {
    if (auto it = j.find("historical_coverage"); it != j.end()) {
      game.historical_coverage =
          Coverage(detail::vector_from_json(*it, where + ".historical_coverage"));
    }
    if (auto it = j.find("true_phi"); it != j.end()) {
      game.true_phi =
          Attractiveness::from_centered(detail::vector_from_json(*it, where + ".true_phi"));
    }
  } catch (const InvalidArgument& e) {
    throw ParseError(where, 0, e.what());
  }
  if (auto it = j.find("attack_counts"); it != j.end()) {
    if (!it->is_array()) throw ParseError(where + ".attack_counts", 0, "expected an array");
    std::vector<std::int64_t> counts;
    for (std::size_t i = 0; i < it->size(); ++i) {
      const auto& c = (*it)[i];
      if (!c.is_number_integer()) {
        throw ParseError(where + ".attack_counts[" + std::to_string(i) + "]", 0,
                         "expected an integer");
      }
      counts.push_back(c.get<std::int64_t>());
    }
    game.attack_counts = std::move(counts);
  }
  try {
    game.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(where, 0, e.what());
  }
  return game;
}

}  // namespace

double GenConfig::resolved_budget() const {
  return budget ? *budget : 3.0 * target_count / 8.0;
}

int GenConfig::validation_games() const {
  if (train_games <= 1) return 0;
  const int carved = static_cast<int>(std::ceil(validation_fraction * train_games - 1e-9));
  return std::clamp(carved, 0, train_games - 1);
}

void GenConfig::validate() const {
  if (target_count < 2) throw InvalidArgument("target_count must be at least 2");
  if (features_per_target <= 0 || train_games <= 0 || test_games <= 0 || attacks_per_game <= 0 ||
      value_net_hidden <= 0) {
    throw InvalidArgument("generator counts must be positive");
  }
  if (!(w_coverage < 0.0)) throw InvalidArgument("w_coverage must be negative");
  const double r = resolved_budget();
  if (!(r > 0.0) || !(r < target_count)) throw InvalidArgument("budget must lie in (0, |T|)");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw InvalidArgument("validation_fraction must lie in [0, 1)");
  }
}

void Dataset::validate() const {
  if (!(w_coverage < 0.0)) throw InvalidArgument("dataset w_coverage must be negative");
  auto check = [](const std::vector<SecurityGame>& games, const char* split, bool observed) {
    for (std::size_t i = 0; i < games.size(); ++i) {
      const std::string where = std::string(split) + "[" + std::to_string(i) + "]";
      try {
        games[i].validate();
      } catch (const InvalidArgument& e) {
        throw InvalidArgument(where + ": " + e.what());
      }
      if (observed && !games[i].attack_counts) {
        throw InvalidArgument(where + ": missing attack_counts");
      }
      if (observed && !games[i].historical_coverage) {
        throw InvalidArgument(where + ": missing historical_coverage");
      }
      if (!observed && !games[i].true_phi) throw InvalidArgument(where + ": missing true_phi");
    }
  };
  check(train, "train", true);
  check(validation, "validation", true);
  check(test, "test", false);
}

Vector rescale_defender_values(const Vector& raw) {
  const double lo = raw.minCoeff();
  const double hi = raw.maxCoeff();
  if (!(hi > lo)) return Vector::Constant(raw.size(), -10.0);
  Vector out = -10.0 + 10.0 * ((raw.array() - lo) / (hi - lo));
  return out;
}

std::vector<std::int64_t> sample_attacks(const AttackDistribution& q, std::int64_t n, Rng& rng) {
  if (n <= 0) throw InvalidArgument("sample_attacks: n must be positive");
  const Eigen::Index size = q.size();
  std::vector<double> cumulative(static_cast<std::size_t>(size));
  double running = 0.0;
  Eigen::Index last_positive = 0;
  for (Eigen::Index i = 0; i < size; ++i) {
    running += q[i];
    cumulative[static_cast<std::size_t>(i)] = running;
    if (q[i] > 0.0) last_positive = i;
  }
  std::vector<std::int64_t> counts(static_cast<std::size_t>(size), 0);
  for (std::int64_t draw = 0; draw < n; ++draw) {
    const double u = rng.uniform() * running;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    auto idx = static_cast<Eigen::Index>(it - cumulative.begin());
    if (idx > last_positive) idx = last_positive;
    ++counts[static_cast<std::size_t>(idx)];
  }
  return counts;
}

GeneratedInstance generate_instance(const GenConfig& config, const SolverConfig& solver) {
  config.validate();
  GeneratedInstance out;
  out.truth.attacker = init_model(config.features_per_target, config.value_net_hidden,
                                  derive_seed(config.seed, {kAttackerNet}), config.w_coverage);
  out.truth.defender = init_model(config.features_per_target, config.value_net_hidden,
                                  derive_seed(config.seed, {kDefenderNet}), config.w_coverage);

  std::vector<SecurityGame> observed;
  observed.reserve(static_cast<std::size_t>(config.train_games));
  for (int i = 0; i < config.train_games; ++i) {
    Rng rng(derive_seed(config.seed, {kTrainGame, static_cast<std::uint64_t>(i)}));
    SecurityGame game = base_game(config, out.truth, rng);
    game.historical_coverage =
        uniform_coverage(game.defender_values, game.budget, config.w_coverage, solver).coverage;
    const AttackDistribution q =
        suqr_attack_distribution(*game.historical_coverage, *game.true_phi, config.w_coverage);
    game.attack_counts = sample_attacks(q, config.attacks_per_game, rng);
    observed.push_back(std::move(game));
  }

  // Validation games: the first k of a seeded permutation, kept in index order.
  std::vector<int> order(static_cast<std::size_t>(config.train_games));
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(derive_seed(config.seed, {kSplit}));
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[split_rng.below(i)]);
  }
  std::vector<bool> is_validation(order.size(), false);
  for (int k = 0; k < config.validation_games(); ++k) is_validation[order[k]] = true;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    (is_validation[i] ? out.dataset.validation : out.dataset.train).push_back(std::move(observed[i]));
  }

  for (int i = 0; i < config.test_games; ++i) {
    Rng rng(derive_seed(config.seed, {kTestGame, static_cast<std::uint64_t>(i)}));
    out.dataset.test.push_back(base_game(config, out.truth, rng));
  }
  out.dataset.w_coverage = config.w_coverage;
  out.dataset.generator = config;
  return out;
}

std::string dataset_to_json(const Dataset& dataset) {
  detail::Json doc;
  doc["format"] = kGamesFormat;
  doc["schema_version"] = kGamesVersion;
  doc["w_coverage"] = dataset.w_coverage;
  if (dataset.generator) doc["generator"] = gen_config_to_json(*dataset.generator);
  detail::Json games = detail::Json::array();
  for (const auto& g : dataset.train) games.push_back(game_to_json(g, "train"));
  for (const auto& g : dataset.validation) games.push_back(game_to_json(g, "validation"));
  for (const auto& g : dataset.test) games.push_back(game_to_json(g, "test"));
  doc["games"] = std::move(games);
  return doc.dump(1) + "\n";
}

Dataset dataset_from_json(const std::string& text) {
  const detail::Json doc = detail::parse_json(text);
  const std::string root = "dataset";
  const auto& format = detail::require(doc, "format", root);
  if (!format.is_string() || format.get<std::string>() != kGamesFormat) {
    throw ParseError("format", 0, "not a game file");
  }
  const auto& version = detail::require(doc, "schema_version", root);
  if (!version.is_number_integer() || version.get<int>() != kGamesVersion) {
    throw ParseError("schema_version", 0, "unsupported schema version");
  }
  Dataset dataset;
  dataset.w_coverage = detail::as_double(detail::require(doc, "w_coverage", root), "w_coverage");
  if (auto it = doc.find("generator"); it != doc.end()) {
    dataset.generator = gen_config_from_json(*it);
  }
  const auto& games = detail::require(doc, "games", root);
  if (!games.is_array()) throw ParseError("games", 0, "expected an array");
  for (std::size_t i = 0; i < games.size(); ++i) {
    const std::string where = game_where(i);
    const auto& split_json = detail::require(games[i], "split", where);
    const std::string split = split_json.is_string() ? split_json.get<std::string>() : "";
    SecurityGame game = game_from_json(games[i], where);
    if (split == "train" || split == "validation") {
      if (!game.attack_counts) throw ParseError(where + ".attack_counts", 0, "missing on a " + split + " game");
      if (!game.historical_coverage) {
        throw ParseError(where + ".historical_coverage", 0, "missing on a " + split + " game");
      }
      (split == "train" ? dataset.train : dataset.validation).push_back(std::move(game));
    } else if (split == "test") {
      if (!game.true_phi) throw ParseError(where + ".true_phi", 0, "missing on a test game");
      dataset.test.push_back(std::move(game));
    } else {
      throw ParseError(where + ".split", 0, "expected train, validation or test");
    }
  }
  try {
    dataset.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError("games", 0, e.what());
  }
  return dataset;
}

void save_games(const Dataset& dataset, const std::filesystem::path& path) {
  detail::write_file(path, dataset_to_json(dataset));
}

Dataset load_games(const std::filesystem::path& path) {
  return dataset_from_json(detail::read_file(path));
}

}  // namespace ssg
