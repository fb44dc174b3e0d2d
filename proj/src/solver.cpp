#include "ssg/solver.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ssg/errors.hpp"
#include "ssg/random.hpp"

namespace ssg {

namespace {

Vector clamp01(const Vector& v) { return v.cwiseMax(0.0).cwiseMin(1.0); }

double shifted_sum(const Vector& v, double shift) {
  return (v.array() - shift).max(0.0).min(1.0).sum();
}

struct Face {
  std::vector<int> lower, upper, free;
  bool budget_active = false;
};

Face classify(const Vector& x, double budget, double tol) {
  Face face;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const int idx = static_cast<int>(i);
    if (x[i] <= tol) {
      face.lower.push_back(idx);
    } else if (x[i] >= 1.0 - tol) {
      face.upper.push_back(idx);
    } else {
      face.free.push_back(idx);
    }
  }
  face.budget_active = x.sum() >= budget - tol;
  return face;
}

constexpr double kPolishTrigger = 1e-2;
constexpr double kMaxStepGrowth = 1e4;

// Newton steps on the active face of the current point. Keeps the result
// only when it lowers the projected-gradient residual.
Vector polish(const DefenderProblem& problem, Vector x, const SolverConfig& config) {
  double residual = stationarity_residual(problem, x, config.initial_step);
  for (int k = 0; k < config.polish_iterations && residual > 1e-14; ++k) {
    const Face face = classify(x, problem.budget, config.activity_tolerance);
    const auto nf = static_cast<Eigen::Index>(face.free.size());
    if (nf == 0) break;
    const bool pinned_sum = face.budget_active;
    if (pinned_sum && nf == 1) break;  // the face is a single point

    const Vector g = problem.gradient(x);
    const Matrix h = deu_hessian(x, problem.phi, problem.w, problem.defender_values);
    Matrix hff(nf, nf);
    Vector gf(nf);
    for (Eigen::Index a = 0; a < nf; ++a) {
      gf[a] = g[face.free[a]];
      for (Eigen::Index b = 0; b < nf; ++b) hff(a, b) = h(face.free[a], face.free[b]);
    }

    // Orthonormal basis of the face directions ({d : sum d = 0} when the
    // budget binds).
    Matrix basis;
    if (pinned_sum) {
      Matrix ones = Matrix::Ones(nf, 1);
      Eigen::HouseholderQR<Matrix> qr(ones);
      basis = Matrix(qr.householderQ()).rightCols(nf - 1);
    } else {
      basis = Matrix::Identity(nf, nf);
    }
    const Matrix reduced = basis.transpose() * hff * basis;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(reduced);
    if (eig.eigenvalues().maxCoeff() >= -1e-10) break;  // not strictly concave here
    const Vector step_reduced = -reduced.ldlt().solve(basis.transpose() * gf);
    const Vector step_free = basis * step_reduced;

    Vector trial = x;
    for (Eigen::Index a = 0; a < nf; ++a) trial[face.free[a]] += step_free[a];
    if ((trial.array() < 0.0).any() || (trial.array() > 1.0).any()) break;
    if (trial.sum() > problem.budget) {
      // Re-pin the budget exactly against round-off.
      trial = project_feasible(trial, problem.budget).values();
    }
    const double trial_residual = stationarity_residual(problem, trial, config.initial_step);
    if (!(trial_residual < residual)) break;
    x = trial;
    residual = trial_residual;
  }
  return x;
}

SolveReport finish(const DefenderProblem& problem, const Vector& x, const SolverConfig& config,
                   int iterations) {
  SolveReport report;
  report.coverage = Coverage(x);
  report.objective = problem.objective(x);
  report.stationarity_residual = stationarity_residual(problem, x, config.initial_step);
  report.converged = report.stationarity_residual <= config.stationarity_tolerance;
  const Face face = classify(x, problem.budget, config.activity_tolerance);
  report.active_lower = face.lower;
  report.active_upper = face.upper;
  report.budget_active = face.budget_active;
  report.iterations = iterations;
  report.restarts_used = 1;
  return report;
}

}  // namespace

void SolverConfig::validate() const {
  if (restarts <= 0 || max_iterations <= 0) {
    throw InvalidArgument("solver restarts and max_iterations must be positive");
  }
  if (!(stationarity_tolerance > 0.0) || !(initial_step > 0.0) || !(min_step > 0.0)) {
    throw InvalidArgument("solver tolerances and steps must be positive");
  }
  if (!(backtracking_factor > 0.0 && backtracking_factor < 1.0)) {
    throw InvalidArgument("backtracking_factor must lie in (0, 1)");
  }
  if (!(armijo_constant > 0.0 && armijo_constant < 1.0)) {
    throw InvalidArgument("armijo_constant must lie in (0, 1)");
  }
  if (polish_iterations < 0 || !(activity_tolerance >= 0.0)) {
    throw InvalidArgument("invalid polishing settings");
  }
}

bool SolveReport::operator==(const SolveReport& other) const {
  return coverage.values() == other.coverage.values() && objective == other.objective &&
         stationarity_residual == other.stationarity_residual &&
         active_lower == other.active_lower && active_upper == other.active_upper &&
         budget_active == other.budget_active && restarts_used == other.restarts_used &&
         best_restart_index == other.best_restart_index && iterations == other.iterations &&
         converged == other.converged;
}

double DefenderProblem::objective(const Vector& x) const {
  return suqr_deu(x, phi, w, defender_values);
}

Vector DefenderProblem::gradient(const Vector& x) const {
  return deu_gradient(x, phi, w, defender_values);
}

void DefenderProblem::validate() const {
  if (!(w < 0.0)) throw InvalidArgument("coverage weight w must be negative");
  if (phi.size() != defender_values.size() || phi.size() == 0) {
    throw InvalidArgument("phi/defender_values dimension mismatch");
  }
  if (!(budget > 0.0)) throw InvalidArgument("budget must be positive");
  if (!phi.allFinite() || !defender_values.allFinite()) {
    throw InvalidArgument("non-finite problem data");
  }
}

Coverage project_feasible(const Vector& point, double budget) {
  if (!point.allFinite()) throw InvalidArgument("project_feasible: non-finite input");
  if (!(budget > 0.0)) throw InvalidArgument("project_feasible: budget must be positive");
  Vector clamped = clamp01(point);
  if (clamped.sum() <= budget) return Coverage(std::move(clamped));

  // sum(clamp(v - tau)) is nonincreasing in tau; bracket the root.
  double lo = 0.0;
  double hi = point.maxCoeff();
  for (int it = 0; it < 200 && hi - lo > 1e-12 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (shifted_sum(point, mid) > budget) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  // Exact shift for the free/upper split found by bisection.
  double tau = hi;
  double free_sum = 0.0;
  int free_count = 0;
  int upper_count = 0;
  for (Eigen::Index i = 0; i < point.size(); ++i) {
    const double s = point[i] - hi;
    if (s >= 1.0) {
      ++upper_count;
    } else if (s > 0.0) {
      free_sum += point[i];
      ++free_count;
    }
  }
  if (free_count > 0) {
    const double exact = (free_sum + upper_count - budget) / free_count;
    if (exact >= lo - 1e-12 && exact <= hi + 1e-12) tau = exact;
  }
  Vector result = clamp01((point.array() - tau).matrix());
  if (result.sum() > budget) result = clamp01((point.array() - hi).matrix());
  return Coverage(std::move(result));
}

double stationarity_residual(const DefenderProblem& problem, const Vector& x, double step) {
  const Vector g = problem.gradient(x);
  const Vector moved = project_feasible(x + step * g, problem.budget).values();
  return (x - moved).norm() / step;
}

SolveReport solve_from(const DefenderProblem& problem, const Vector& start,
                       const SolverConfig& config, const AscentObserver& observer) {
  config.validate();
  problem.validate();
  if (start.size() != problem.target_count()) {
    throw InvalidArgument("solve_from: start has wrong dimension");
  }
  Vector x = project_feasible(start, problem.budget).values();
  double f = problem.objective(x);
  Vector g = problem.gradient(x);
  const double s0 = config.initial_step;
  // Each line search starts from twice the last accepted step, so flat
  // regions (large |phi|) are crossed in few iterations.
  double last_step = s0;

  int iteration = 0;
  for (; iteration < config.max_iterations; ++iteration) {
    const Vector full = project_feasible(x + s0 * g, problem.budget).values();
    const double residual = (x - full).norm() / s0;
    if (residual <= config.stationarity_tolerance) break;

    // Near a solution, fixed-step ascent converges linearly; try a Newton
    // jump on the current face and keep it if it does not lose objective.
    if (config.polish_iterations > 0 && residual <= kPolishTrigger && iteration % 5 == 0) {
      const Vector y = polish(problem, x, config);
      const double fy = problem.objective(y);
      if (fy >= f && !(y.array() == x.array()).all()) {
        x = y;
        f = fy;
        g = problem.gradient(x);
        if (observer) observer(0, iteration, f);
        continue;
      }
    }

    double step = std::min(2.0 * last_step, kMaxStepGrowth * s0);
    bool accepted = false;
    Vector trial = project_feasible(x + step * g, problem.budget).values();
    while (true) {
      const double ft = problem.objective(trial);
      if (ft >= f + config.armijo_constant * g.dot(trial - x)) {
        x = trial;
        f = ft;
        last_step = step;
        accepted = true;
        break;
      }
      step *= config.backtracking_factor;
      if (step < config.min_step) break;
      trial = project_feasible(x + step * g, problem.budget).values();
    }
    if (!accepted) break;
    g = problem.gradient(x);
    if (observer) observer(0, iteration, f);
  }

  if (config.polish_iterations > 0) x = polish(problem, x, config);
  return finish(problem, x, config, iteration);
}

SolveReport solve_defender(const DefenderProblem& problem, const SolverConfig& config,
                           const AscentObserver& observer) {
  config.validate();
  problem.validate();
  const Eigen::Index n = problem.target_count();

  SolveReport best;
  bool have_best = false;
  for (int r = 0; r < config.restarts; ++r) {
    Vector start;
    if (r == 0) {
      start = Coverage::uniform(n, problem.budget).values();
    } else {
      Rng rng(derive_seed(config.seed, {static_cast<std::uint64_t>(r)}));
      start.resize(n);
      for (Eigen::Index i = 0; i < n; ++i) start[i] = rng.uniform();
    }
    AscentObserver tagged;
    if (observer) {
      tagged = [&observer, r](int, int it, double f) { observer(r, it, f); };
    }
    SolveReport report = solve_from(problem, start, config, tagged);
    if (!have_best || report.objective > best.objective + 1e-12) {
      best = std::move(report);
      best.best_restart_index = r;
      have_best = true;
    }
  }
  best.restarts_used = config.restarts;
  return best;
}

SolveReport solve_defender(const Attractiveness& phi_hat, double w, const Vector& defender_values,
                           double budget, const SolverConfig& config) {
  return solve_defender(DefenderProblem{phi_hat.values(), w, defender_values, budget}, config);
}

SolveReport uniform_coverage(const Vector& defender_values, double budget, double w,
                             const SolverConfig& config) {
  if (budget > static_cast<double>(defender_values.size())) {
    throw InvalidArgument("uniform_coverage: budget exceeds target count");
  }
  return solve_defender(
      DefenderProblem{Vector::Zero(defender_values.size()), w, defender_values, budget}, config);
}

}  // namespace ssg
