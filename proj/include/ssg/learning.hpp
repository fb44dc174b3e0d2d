#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ssg/datagen.hpp"
#include "ssg/diffopt.hpp"
#include "ssg/model.hpp"
#include "ssg/solver.hpp"

namespace ssg {

struct TrainConfig {
  int epochs = 100;
  double learning_rate = 1e-3;
  int early_stopping_patience = 10;
  double dropout_rate = 0.5;  // two-stage only
  std::optional<double> smoothing_alpha;  // defaults to 1/|T|
  int hidden_dim = 200;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  // Two-stage: mean cross-entropy. Decision-focused: mean DEU under the
  // recovered attractiveness.
  double train_metric = 0.0;
  double validation_metric = 0.0;
};

struct TrainResult {
  ValueModel model;  // best-validation checkpoint
  int best_epoch = 0;  // 0 is the initial model
  std::vector<EpochRecord> history;  // history[0] is the initial model
  int solver_failures = 0;
  int skipped_updates = 0;  // games whose KKT system could not be solved
};

// phi_i = log q'_i - w p_i, mean-centered, where q' is q_tilde after additive
// smoothing: (q N + alpha) / (N + alpha |T|) with N = total_attacks when
// known, else (q + alpha) / (1 + alpha |T|).
Attractiveness recover_attractiveness(const AttackDistribution& q_tilde, double w,
                                      const Coverage& historical_coverage, double smoothing_alpha,
                                      std::optional<std::int64_t> total_attacks = std::nullopt);

// From a training game's counts; alpha defaults to 1/|T|.
Attractiveness recover_attractiveness(const SecurityGame& game, double w,
                                      std::optional<double> smoothing_alpha = std::nullopt);

// Cross-entropy of the model's prediction at the historical coverage.
double two_stage_loss(const ValueModel& model, const SecurityGame& game);

TrainResult train_two_stage(const Dataset& dataset, const TrainConfig& config);
TrainResult train_two_stage(const Dataset& dataset, const TrainConfig& config,
                            const ValueModel& initial);

struct DecisionGradient {
  ModelGradients gradients;  // ascent direction for DEU
  Vector phi_gradient;       // d DEU / d phi_hat
  SolveReport report;
  double deu = 0.0;  // DEU(x*; recovered_phi)
};

DecisionGradient decision_focused_gradient(const SecurityGame& game, const ValueModel& model,
                                           const Attractiveness& recovered_phi,
                                           const SolverConfig& solver_config,
                                           const KktOptions& kkt = {});

TrainResult train_decision_focused(const Dataset& dataset, const TrainConfig& config,
                                   const SolverConfig& solver_config);
TrainResult train_decision_focused(const Dataset& dataset, const TrainConfig& config,
                                   const SolverConfig& solver_config, const ValueModel& initial);

struct Evaluation {
  std::vector<double> deu;
  double mean = 0.0;
  double median = 0.0;
  int solver_failures = 0;
};

// Plans against the model's phi_hat, scores against each game's true_phi.
Evaluation evaluate(const ValueModel& model, const std::vector<SecurityGame>& games, double w,
                    const SolverConfig& solver_config);

// Plans against phi = 0.
Evaluation evaluate_uniform(const std::vector<SecurityGame>& games, double w,
                            const SolverConfig& solver_config);

double median(std::vector<double> values);

}  // namespace ssg
