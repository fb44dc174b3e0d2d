#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ssg/game.hpp"

namespace ssg::theory {

// Zero-sum two-target game with a single resource. Attacker values are
// nonnegative, sum to one and are ordered z0 >= z1; epsilon is the
// magnitude of the defender's estimation error.
struct TwoTargetGame {
  double z0 = 0.5;
  double z1 = 0.5;
  double epsilon = 0.0;

  static TwoTargetGame make(double z0, double epsilon);
  void validate() const;
  // epsilon^2 <= (1 - z0)^2, the condition for both error configurations.
  bool error_admissible() const;
};

// argmax_j (1 - p_j) u_a(j). Ties (within 1e-12) go to the larger value,
// then the lower index.
int rational_best_response(const Vector& attacker_values, const Vector& coverage);

struct RationalSolution {
  Coverage coverage;
  double deu = 0.0;
};

// Coverage equal to the attacker values equalizes the two payoffs; the
// defender then gets -(1 - v0) v0. Values must be nonnegative, sum to 1.
RationalSolution optimal_rational_coverage(double v0, double v1);
RationalSolution optimal_rational_coverage(const TwoTargetGame& game);

// (1 - (z0 - eps)) z0 / ((1 - (z1 - eps)) z1)
double theorem1_ratio(const TwoTargetGame& game);

struct Theorem1Report {
  double realized_deu_overestimate_first = 0.0;  // estimate (z0 + eps, z1 - eps)
  double realized_deu_underestimate_first = 0.0;  // estimate (z0 - eps, z1 + eps)
  double best_deu = 0.0;
  double worst_deu = 0.0;
  double enumerated_ratio = 0.0;  // worst / best
  double formula_ratio = 0.0;
  bool passed = false;
};

using RatioFormula = std::function<double(const TwoTargetGame&)>;

// Enumerates both estimate configurations with squared error eps^2, plans
// against each, lets the attacker best-respond to the truth, and compares
// the realized DEU ratio to `formula` (theorem1_ratio by default).
Theorem1Report theorem1_verify(const TwoTargetGame& game, const RatioFormula& formula = {});

// (2 / ((1 - alpha) eps)) log(1 / ((1 - alpha) eps))
double theorem2_lambda_bound(double alpha, double epsilon);

struct Theorem2Report {
  double lambda = 0.0;
  double qr_optimal_coverage = 0.0;  // p' on the higher-value target
  double coverage_limit = 0.0;       // 1 - alpha eps
  double loss = 0.0;                 // true-game loss of p' vs. the optimum
  double loss_bound = 0.0;           // (1 - eps) alpha eps
  bool coverage_ok = false;
  bool loss_ok = false;
  bool passed() const { return coverage_ok && loss_ok; }
};

// Defender loss (attacker's expected payoff) in a zero-sum two-target game
// against a QR attacker, with coverage p on target 0 and 1 - p on target 1.
double qr_defender_loss(double value0, double value1, double p, double lambda);

// Grid minimizer of qr_defender_loss over p in [0, 1].
double qr_optimal_coverage(double value0, double value1, double lambda, double resolution);

// True values (1, 0), estimate (1 - eps, eps). At lambda = lambda_multiplier
// times the bound, grid-search the QR-optimal p' against the estimate and
// check p' <= 1 - alpha eps + resolution and loss >= (1 - eps) alpha eps - tol.
Theorem2Report theorem2_verify(double alpha, double epsilon, double grid_resolution,
                               double lambda_multiplier = 1.0, double tolerance = 1e-9);

struct TheoryConfig {
  std::uint64_t seed = 2019;
  int theorem1_cases = 100;
  int theorem2_cases = 20;
  double grid_resolution = 1e-4;
  RatioFormula ratio_formula;  // override for negative tests
};

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct TheoryReport {
  std::vector<CheckResult> checks;
  bool passed() const;
  std::string to_text() const;
};

TheoryReport verify_theory(const TheoryConfig& config = {});

}  // namespace ssg::theory
