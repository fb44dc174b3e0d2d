#include "ssg/learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ssg/errors.hpp"
#include "ssg/random.hpp"

namespace ssg {

namespace {

enum : std::uint64_t {
  kInitStream = 11,
  kShuffleStream = 12,
  kDropoutStream = 13,
};

std::vector<std::size_t> shuffled_order(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, {kShuffleStream, static_cast<std::uint64_t>(epoch)}));
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
  return order;
}

void require_train(const Dataset& dataset) {
  if (dataset.train.empty()) throw InvalidArgument("training split is empty");
  dataset.validate();
}

ValueModel initial_model(const Dataset& dataset, const TrainConfig& config) {
  return init_model(dataset.train.front().feature_count(), config.hidden_dim,
                    derive_seed(config.seed, {kInitStream}), dataset.w_coverage);
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double mean_two_stage_loss(const ValueModel& model, const std::vector<SecurityGame>& games) {
  double total = 0.0;
  for (const auto& g : games) total += two_stage_loss(model, g);
  return games.empty() ? 0.0 : total / static_cast<double>(games.size());
}

double mean_counterfactual_deu(const ValueModel& model, const std::vector<SecurityGame>& games,
                               const std::vector<Attractiveness>& recovered, double w,
                               const SolverConfig& solver, int& failures) {
  double total = 0.0;
  for (std::size_t i = 0; i < games.size(); ++i) {
    const auto& g = games[i];
    const SolveReport report =
        solve_defender(forward(model, g.features), w, g.defender_values, g.budget, solver);
    if (!report.converged) ++failures;
    total += suqr_deu(report.coverage, recovered[i], w, g.defender_values);
  }
  return games.empty() ? 0.0 : total / static_cast<double>(games.size());
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 0) throw InvalidArgument("epochs must be nonnegative");
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be positive");
  if (early_stopping_patience <= 0) throw InvalidArgument("early_stopping_patience must be positive");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    throw InvalidArgument("dropout_rate must lie in [0, 1)");
  }
  if (smoothing_alpha && !(*smoothing_alpha >= 0.0)) {
    throw InvalidArgument("smoothing_alpha must be nonnegative");
  }
  if (hidden_dim <= 0) throw InvalidArgument("hidden_dim must be positive");
}

Attractiveness recover_attractiveness(const AttackDistribution& q_tilde, double w,
                                      const Coverage& historical_coverage, double smoothing_alpha,
                                      std::optional<std::int64_t> total_attacks) {
  if (!(w < 0.0)) throw InvalidArgument("coverage weight w must be negative");
  if (!(smoothing_alpha >= 0.0)) throw InvalidArgument("smoothing_alpha must be nonnegative");
  if (q_tilde.size() != historical_coverage.size()) {
    throw InvalidArgument("recover_attractiveness: dimension mismatch");
  }
  const auto n = static_cast<double>(q_tilde.size());
  Vector smoothed;
  if (total_attacks) {
    const auto attacks = static_cast<double>(*total_attacks);
    smoothed = (q_tilde.values() * attacks).array() + smoothing_alpha;
    smoothed /= attacks + smoothing_alpha * n;
  } else {
    smoothed = q_tilde.values().array() + smoothing_alpha;
    smoothed /= 1.0 + smoothing_alpha * n;
  }
  if ((smoothed.array() <= 0.0).any()) {
    throw InvalidArgument("cannot invert a zero attack probability without smoothing");
  }
  return Attractiveness(smoothed.array().log().matrix() - w * historical_coverage.values());
}

Attractiveness recover_attractiveness(const SecurityGame& game, double w,
                                      std::optional<double> smoothing_alpha) {
  if (!game.attack_counts || !game.historical_coverage) {
    throw InvalidArgument("recover_attractiveness: game has no attack observations");
  }
  const double alpha = smoothing_alpha ? *smoothing_alpha : 1.0 / game.target_count();
  const auto& counts = *game.attack_counts;
  const std::int64_t total = std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
  return recover_attractiveness(empirical_attack_distribution(counts), w, *game.historical_coverage,
                                alpha, total);
}

double two_stage_loss(const ValueModel& model, const SecurityGame& game) {
  const Attractiveness phi = forward(model, game.features);
  const AttackDistribution predicted =
      suqr_attack_distribution(*game.historical_coverage, phi, model.w_coverage);
  return cross_entropy_loss(predicted, empirical_attack_distribution(*game.attack_counts));
}

TrainResult train_two_stage(const Dataset& dataset, const TrainConfig& config) {
  require_train(dataset);
  return train_two_stage(dataset, config, initial_model(dataset, config));
}

TrainResult train_two_stage(const Dataset& dataset, const TrainConfig& config,
                            const ValueModel& initial) {
  config.validate();
  require_train(dataset);
  const bool early_stopping = !dataset.validation.empty();

  TrainResult result;
  result.model = initial;
  ValueModel model = initial;
  AdamState adam = AdamState::for_model(model);

  std::vector<AttackDistribution> empirical;
  for (const auto& g : dataset.train) empirical.push_back(empirical_attack_distribution(*g.attack_counts));

  double best = early_stopping ? mean_two_stage_loss(model, dataset.validation) : 0.0;
  result.history.push_back({0, mean_two_stage_loss(model, dataset.train), best});
  int since_best = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    Rng dropout_rng(derive_seed(config.seed, {kDropoutStream, static_cast<std::uint64_t>(epoch)}));
    for (std::size_t idx : shuffled_order(dataset.train.size(), config.seed, epoch)) {
      const SecurityGame& g = dataset.train[idx];
      const Vector mask = sample_dropout_mask(model.hidden_dim(), config.dropout_rate, dropout_rng);
      const Attractiveness phi = forward(model, g.features, &mask);
      const Vector predicted = softmax(model.w_coverage * g.historical_coverage->values() + phi.values());
      // d CE / d phi = q_hat - q_tilde.
      const Vector grad_phi = predicted - empirical[idx].values();
      const ModelGradients grads = backward(model, g.features, grad_phi, &mask);
      UpdateResult step = apply_update(model, grads, adam, config.learning_rate);
      model = std::move(step.model);
      adam = std::move(step.state);
    }
    const double train_loss = mean_two_stage_loss(model, dataset.train);
    const double val_loss = early_stopping ? mean_two_stage_loss(model, dataset.validation) : 0.0;
    result.history.push_back({epoch, train_loss, val_loss});

    if (!early_stopping) {
      result.model = model;
      result.best_epoch = epoch;
      continue;
    }
    if (val_loss < best) {
      best = val_loss;
      result.model = model;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.early_stopping_patience) {
      break;
    }
  }
  return result;
}

DecisionGradient decision_focused_gradient(const SecurityGame& game, const ValueModel& model,
                                           const Attractiveness& recovered_phi,
                                           const SolverConfig& solver_config,
                                           const KktOptions& kkt) {
  const Attractiveness phi_hat = forward(model, game.features);
  const DefenderProblem planning{phi_hat.values(), model.w_coverage, game.defender_values,
                                 game.budget};
  DecisionGradient out;
  out.report = solve_defender(planning, solver_config);
  out.deu = suqr_deu(out.report.coverage, recovered_phi, model.w_coverage, game.defender_values);
  out.phi_gradient = chain_gradient(out.report, planning, recovered_phi, kkt);
  out.gradients = backward(model, game.features, out.phi_gradient);
  return out;
}

TrainResult train_decision_focused(const Dataset& dataset, const TrainConfig& config,
                                   const SolverConfig& solver_config) {
  require_train(dataset);
  return train_decision_focused(dataset, config, solver_config, initial_model(dataset, config));
}

TrainResult train_decision_focused(const Dataset& dataset, const TrainConfig& config,
                                   const SolverConfig& solver_config, const ValueModel& initial) {
  config.validate();
  solver_config.validate();
  require_train(dataset);
  const double w = dataset.w_coverage;
  const bool early_stopping = !dataset.validation.empty();

  std::vector<Attractiveness> train_phi;
  for (const auto& g : dataset.train) {
    train_phi.push_back(recover_attractiveness(g, w, config.smoothing_alpha));
  }
  std::vector<Attractiveness> val_phi;
  for (const auto& g : dataset.validation) {
    val_phi.push_back(recover_attractiveness(g, w, config.smoothing_alpha));
  }

  TrainResult result;
  result.model = initial;
  ValueModel model = initial;
  AdamState adam = AdamState::for_model(model);

  int ignored = 0;
  double best = early_stopping
                    ? mean_counterfactual_deu(model, dataset.validation, val_phi, w, solver_config, ignored)
                    : 0.0;
  result.history.push_back(
      {0, mean_counterfactual_deu(model, dataset.train, train_phi, w, solver_config, ignored), best});
  int since_best = 0;

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<double> epoch_deu;
    for (std::size_t idx : shuffled_order(dataset.train.size(), config.seed, epoch)) {
      DecisionGradient step;
      try {
        step = decision_focused_gradient(dataset.train[idx], model, train_phi[idx], solver_config);
      } catch (const SingularSystemError&) {
        ++result.skipped_updates;
        continue;
      }
      if (!step.report.converged) ++result.solver_failures;
      epoch_deu.push_back(step.deu);
      // Adam descends, so pass -dDEU.
      step.gradients *= -1.0;
      UpdateResult update = apply_update(model, step.gradients, adam, config.learning_rate);
      model = std::move(update.model);
      adam = std::move(update.state);
    }
    const double val_deu =
        early_stopping ? mean_counterfactual_deu(model, dataset.validation, val_phi, w, solver_config,
                                                 result.solver_failures)
                       : 0.0;
    result.history.push_back({epoch, mean_of(epoch_deu), val_deu});

    if (!early_stopping) {
      result.model = model;
      result.best_epoch = epoch;
      continue;
    }
    if (val_deu > best) {
      best = val_deu;
      result.model = model;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.early_stopping_patience) {
      break;
    }
  }
  return result;
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  if (values.size() % 2 == 1) return values[mid];
  return 0.5 * (values[mid - 1] + values[mid]);
}

namespace {

Evaluation summarize(std::vector<double> deu, int failures) {
  Evaluation out;
  out.mean = mean_of(deu);
  out.median = median(deu);
  out.deu = std::move(deu);
  out.solver_failures = failures;
  return out;
}

}  // namespace

Evaluation evaluate(const ValueModel& model, const std::vector<SecurityGame>& games, double w,
                    const SolverConfig& solver_config) {
  std::vector<double> deu;
  int failures = 0;
  for (std::size_t i = 0; i < games.size(); ++i) {
    const auto& g = games[i];
    if (!g.true_phi) {
      throw InvalidArgument("evaluate: game " + std::to_string(i) + " has no evaluation attractiveness");
    }
    const SolveReport report =
        solve_defender(forward(model, g.features), w, g.defender_values, g.budget, solver_config);
    if (!report.converged) ++failures;
    deu.push_back(suqr_deu(report.coverage, *g.true_phi, w, g.defender_values));
  }
  return summarize(std::move(deu), failures);
}

Evaluation evaluate_uniform(const std::vector<SecurityGame>& games, double w,
                            const SolverConfig& solver_config) {
  std::vector<double> deu;
  int failures = 0;
  for (std::size_t i = 0; i < games.size(); ++i) {
    const auto& g = games[i];
    if (!g.true_phi) {
      throw InvalidArgument("evaluate: game " + std::to_string(i) + " has no evaluation attractiveness");
    }
    const SolveReport report = uniform_coverage(g.defender_values, g.budget, w, solver_config);
    if (!report.converged) ++failures;
    deu.push_back(suqr_deu(report.coverage, *g.true_phi, w, g.defender_values));
  }
  return summarize(std::move(deu), failures);
}

}  // namespace ssg
