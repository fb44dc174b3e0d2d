#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ssg/game.hpp"

namespace ssg {

// Multi-start projected gradient ascent settings. None of these come from a
// published solver; they are exposed so experiments can record them.
struct SolverConfig {
  int restarts = 10;
  int max_iterations = 500;
  double stationarity_tolerance = 1e-6;  // on the projected-gradient norm
  double initial_step = 0.1;
  double backtracking_factor = 0.5;
  double min_step = 1e-12;
  double armijo_constant = 1e-4;
  // Newton iterations on the final active face; 0 disables polishing.
  int polish_iterations = 20;
  double activity_tolerance = 1e-9;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SolveReport {
  Coverage coverage;
  double objective = 0.0;
  double stationarity_residual = 0.0;
  std::vector<int> active_lower;
  std::vector<int> active_upper;
  bool budget_active = false;
  int restarts_used = 0;
  int best_restart_index = 0;
  int iterations = 0;  // of the winning restart
  bool converged = false;

  bool operator==(const SolveReport& other) const;
};

// Defender problem for one game: maximize suqr_deu over the capped simplex.
struct DefenderProblem {
  Vector phi;
  double w = -4.0;
  Vector defender_values;
  double budget = 1.0;

  Eigen::Index target_count() const { return defender_values.size(); }
  double objective(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  void validate() const;
};

// Called with (restart, iteration, objective) after each accepted step.
using AscentObserver = std::function<void(int, int, double)>;

// Euclidean projection onto {0 <= p <= 1, sum p <= budget}.
Coverage project_feasible(const Vector& point, double budget);

// ||x - P(x + s grad)|| / s for the configured initial step s.
double stationarity_residual(const DefenderProblem& problem, const Vector& x, double step);

// Single ascent run from `start` (projected first). Used directly for
// basin-tracked warm starts.
SolveReport solve_from(const DefenderProblem& problem, const Vector& start,
                       const SolverConfig& config, const AscentObserver& observer = {});

// Best of `config.restarts` runs: restart 0 starts at uniform coverage,
// the rest at seeded random feasible points.
SolveReport solve_defender(const DefenderProblem& problem, const SolverConfig& config,
                           const AscentObserver& observer = {});

SolveReport solve_defender(const Attractiveness& phi_hat, double w, const Vector& defender_values,
                           double budget, const SolverConfig& config);

// DEU-optimal coverage when all targets are assumed equally attractive.
SolveReport uniform_coverage(const Vector& defender_values, double budget, double w,
                             const SolverConfig& config);

}  // namespace ssg
