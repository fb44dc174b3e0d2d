#include "ssg/theory.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ssg/errors.hpp"
#include "ssg/random.hpp"

namespace ssg::theory {

namespace {

constexpr double kTieTolerance = 1e-12;

bool close_relative(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(1.0, std::abs(b));
}

std::string fmt(double x) {
  std::ostringstream out;
  out.precision(10);
  out << x;
  return out.str();
}

}  // namespace

TwoTargetGame TwoTargetGame::make(double z0, double epsilon) {
  TwoTargetGame game{z0, 1.0 - z0, epsilon};
  game.validate();
  return game;
}

void TwoTargetGame::validate() const {
  if (!(z1 >= 0.0) || !(z0 >= z1) || std::abs(z0 + z1 - 1.0) > 1e-12) {
    throw InvalidArgument("two-target values must satisfy z0 >= z1 >= 0, z0 + z1 = 1");
  }
  if (!(epsilon >= 0.0)) throw InvalidArgument("epsilon must be nonnegative");
}

bool TwoTargetGame::error_admissible() const {
  return epsilon * epsilon <= (1.0 - z0) * (1.0 - z0) + 1e-15;
}

int rational_best_response(const Vector& attacker_values, const Vector& coverage) {
  if (attacker_values.size() == 0) throw InvalidArgument("rational_best_response: empty game");
  if (attacker_values.size() != coverage.size()) {
    throw InvalidArgument("rational_best_response: dimension mismatch");
  }
  Eigen::Index best = 0;
  double best_payoff = (1.0 - coverage[0]) * attacker_values[0];
  for (Eigen::Index j = 1; j < attacker_values.size(); ++j) {
    const double payoff = (1.0 - coverage[j]) * attacker_values[j];
    if (payoff > best_payoff + kTieTolerance ||
        (std::abs(payoff - best_payoff) <= kTieTolerance &&
         attacker_values[j] > attacker_values[best])) {
      best = j;
      best_payoff = payoff;
    }
  }
  return static_cast<int>(best);
}

RationalSolution optimal_rational_coverage(double v0, double v1) {
  if (!(v0 >= 0.0) || !(v1 >= 0.0) || std::abs(v0 + v1 - 1.0) > 1e-12) {
    throw InvalidArgument("optimal_rational_coverage: values must be nonnegative and sum to 1");
  }
  Vector p(2);
  p << v0, v1;
  return RationalSolution{Coverage(p), -(1.0 - v0) * v0};
}

RationalSolution optimal_rational_coverage(const TwoTargetGame& game) {
  game.validate();
  return optimal_rational_coverage(game.z0, game.z1);
}

double theorem1_ratio(const TwoTargetGame& game) {
  game.validate();
  if (!game.error_admissible()) throw InvalidArgument("theorem1_ratio: epsilon^2 > (1 - z0)^2");
  const double eps = game.epsilon;
  return (1.0 - (game.z0 - eps)) * game.z0 / ((1.0 - (game.z1 - eps)) * game.z1);
}

Theorem1Report theorem1_verify(const TwoTargetGame& game, const RatioFormula& formula) {
  game.validate();
  if (!game.error_admissible()) throw InvalidArgument("theorem1_verify: epsilon^2 > (1 - z0)^2");
  Vector truth(2);
  truth << game.z0, game.z1;

  auto realized = [&](double estimate0, double estimate1) {
    const RationalSolution plan = optimal_rational_coverage(estimate0, estimate1);
    const int target = rational_best_response(truth, plan.coverage);
    return -(1.0 - plan.coverage[target]) * truth[target];
  };

  Theorem1Report report;
  const double eps = game.epsilon;
  report.realized_deu_overestimate_first = realized(game.z0 + eps, game.z1 - eps);
  report.realized_deu_underestimate_first = realized(game.z0 - eps, game.z1 + eps);
  report.best_deu =
      std::max(report.realized_deu_overestimate_first, report.realized_deu_underestimate_first);
  report.worst_deu =
      std::min(report.realized_deu_overestimate_first, report.realized_deu_underestimate_first);
  report.enumerated_ratio = report.worst_deu / report.best_deu;
  report.formula_ratio = formula ? formula(game) : theorem1_ratio(game);
  report.passed = close_relative(report.enumerated_ratio, report.formula_ratio, 1e-12);
  return report;
}

double theorem2_lambda_bound(double alpha, double epsilon) {
  const double k = (1.0 - alpha) * epsilon;
  if (!(alpha >= 0.0 && alpha <= 1.0) || !(k > 0.0 && k < 1.0)) {
    throw InvalidArgument("theorem2_lambda_bound: need alpha in [0,1] and (1-alpha) eps in (0,1)");
  }
  return 2.0 / k * std::log(1.0 / k);
}

double qr_defender_loss(double value0, double value1, double p, double lambda) {
  Vector values(2), coverage(2);
  values << value0, value1;
  coverage << p, 1.0 - p;
  const AttackDistribution q = qr_attack_distribution(values, coverage, lambda);
  return q[0] * (1.0 - p) * value0 + q[1] * p * value1;
}

double qr_optimal_coverage(double value0, double value1, double lambda, double resolution) {
  if (!(resolution > 0.0 && resolution <= 1.0)) {
    throw InvalidArgument("grid resolution must lie in (0, 1]");
  }
  const auto steps = static_cast<long>(std::llround(1.0 / resolution));
  double best_p = 0.0;
  double best_loss = qr_defender_loss(value0, value1, 0.0, lambda);
  for (long k = 1; k <= steps; ++k) {
    const double p = static_cast<double>(k) / static_cast<double>(steps);
    const double loss = qr_defender_loss(value0, value1, p, lambda);
    if (loss < best_loss) {
      best_loss = loss;
      best_p = p;
    }
  }
  return best_p;
}

Theorem2Report theorem2_verify(double alpha, double epsilon, double grid_resolution,
                               double lambda_multiplier, double tolerance) {
  if (!(alpha >= 0.5 && alpha < 1.0)) throw InvalidArgument("theorem2_verify: alpha must lie in [0.5, 1)");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidArgument("theorem2_verify: epsilon must lie in (0, 1)");
  if (!(lambda_multiplier >= 1.0)) throw InvalidArgument("theorem2_verify: multiplier must be >= 1");
  Theorem2Report report;
  report.lambda = lambda_multiplier * theorem2_lambda_bound(alpha, epsilon);
  report.qr_optimal_coverage = qr_optimal_coverage(1.0 - epsilon, epsilon, report.lambda, grid_resolution);
  report.coverage_limit = 1.0 - alpha * epsilon;
  report.coverage_ok = report.qr_optimal_coverage <= report.coverage_limit + grid_resolution;
  // Full coverage of the only valuable target is optimal in the true game.
  const double optimum = qr_defender_loss(1.0, 0.0, 1.0, report.lambda);
  report.loss = qr_defender_loss(1.0, 0.0, report.qr_optimal_coverage, report.lambda) - optimum;
  report.loss_bound = (1.0 - epsilon) * alpha * epsilon;
  report.loss_ok = report.loss >= report.loss_bound - tolerance;
  return report;
}

bool TheoryReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

std::string TheoryReport::to_text() const {
  std::ostringstream out;
  for (const auto& c : checks) {
    out << (c.passed ? "PASS " : "FAIL ") << c.name;
    if (!c.detail.empty()) out << "  " << c.detail;
    out << '\n';
  }
  out << (passed() ? "all theory checks passed" : "theory verification FAILED") << '\n';
  return out.str();
}

TheoryReport verify_theory(const TheoryConfig& config) {
  TheoryReport report;
  Rng rng(config.seed);

  {
    const Theorem1Report r = theorem1_verify(TwoTargetGame::make(0.6, 0.1), config.ratio_formula);
    const bool deus = close_relative(r.best_deu, -0.28, 1e-12) && close_relative(r.worst_deu, -0.30, 1e-12);
    const bool ratio = close_relative(r.formula_ratio, 15.0 / 14.0, 1e-12);
    report.checks.push_back({"theorem1.worked_example", r.passed && deus && ratio,
                             "z=(0.6,0.4) eps=0.1: realized DEU {" + fmt(r.worst_deu) + ", " +
                                 fmt(r.best_deu) + "}, ratio " + fmt(r.enumerated_ratio) +
                                 " vs formula " + fmt(r.formula_ratio) + " (15/14 = " +
                                 fmt(15.0 / 14.0) + ")"});
  }
  {
    int failures = 0;
    int below_one = 0;
    double worst_gap = 0.0;
    for (int i = 0; i < config.theorem1_cases; ++i) {
      const double z0 = rng.uniform(0.5, 0.99);
      const double eps = rng.uniform(0.0, 1.0 - z0);
      const Theorem1Report r = theorem1_verify(TwoTargetGame::make(z0, eps), config.ratio_formula);
      if (!r.passed) ++failures;
      if (r.formula_ratio < 1.0 - 1e-12) ++below_one;
      worst_gap = std::max(worst_gap, std::abs(r.enumerated_ratio - r.formula_ratio));
    }
    report.checks.push_back({"theorem1.enumeration_matches_ratio", failures == 0,
                             std::to_string(config.theorem1_cases - failures) + "/" +
                                 std::to_string(config.theorem1_cases) + " cases, max |gap| " +
                                 fmt(worst_gap)});
    report.checks.push_back({"theorem1.ratio_at_least_one", below_one == 0,
                             std::to_string(below_one) + " cases below 1"});
  }
  {
    const double bound = theorem2_lambda_bound(0.5, 0.1);
    const Theorem2Report r = theorem2_verify(0.5, 0.1, config.grid_resolution);
    report.checks.push_back(
        {"theorem2.worked_example", r.passed() && close_relative(bound, 40.0 * std::log(20.0), 1e-12),
         "alpha=0.5 eps=0.1: lambda " + fmt(bound) + ", p' " + fmt(r.qr_optimal_coverage) +
             " <= " + fmt(r.coverage_limit) + ", loss " + fmt(r.loss) + " >= " + fmt(r.loss_bound)});
  }
  {
    int failures = 0;
    std::string first_failure;
    for (int i = 0; i < config.theorem2_cases; ++i) {
      const double alpha = rng.uniform(0.5, 0.99);
      const double eps = rng.uniform(0.01, 0.99);
      const Theorem2Report r = theorem2_verify(alpha, eps, config.grid_resolution);
      if (!r.passed()) {
        if (failures == 0) first_failure = " first failure alpha=" + fmt(alpha) + " eps=" + fmt(eps);
        ++failures;
      }
    }
    report.checks.push_back({"theorem2.random_cases", failures == 0,
                             std::to_string(config.theorem2_cases - failures) + "/" +
                                 std::to_string(config.theorem2_cases) + " cases" + first_failure});
  }
  {
    const Theorem2Report r = theorem2_verify(0.5, 0.1, config.grid_resolution, 10.0);
    const double rational = optimal_rational_coverage(0.9, 0.1).coverage[0];
    report.checks.push_back({"theorem2.large_lambda_limit",
                             std::abs(r.qr_optimal_coverage - rational) <= 1e-2,
                             "p' " + fmt(r.qr_optimal_coverage) + " vs rational " + fmt(rational)});
  }
  {
    double worst = 0.0;
    for (int i = 0; i < 10; ++i) {
      const double z0 = rng.uniform(0.5, 0.95);
      const double p = qr_optimal_coverage(z0, 1.0 - z0, 1e4, config.grid_resolution);
      worst = std::max(worst, std::abs(p - optimal_rational_coverage(z0, 1.0 - z0).coverage[0]));
    }
    report.checks.push_back({"qr_to_rational_consistency", worst <= 1e-2,
                             "max |p'(lambda=1e4) - z0| = " + fmt(worst)});
  }
  return report;
}

}  // namespace ssg::theory
