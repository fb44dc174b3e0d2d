#pragma once

#include <vector>

#include "ssg/game.hpp"
#include "ssg/solver.hpp"

namespace ssg {

// Constraints of the capped simplex that bind at a solution.
struct ActiveSet {
  std::vector<int> lower;  // p_i = 0
  std::vector<int> upper;  // p_i = 1
  bool budget = false;     // sum p = R

  bool empty() const { return lower.empty() && upper.empty() && !budget; }
};

// Second-order data for differentiating a local optimum of
//   min_x f(x, phi) = -DEU(x; phi)  over the capped simplex,
// with active inequalities treated as equalities.
struct KktSystem {
  Matrix hessian;             // d^2 f / dx^2, shifted so the face Hessian is >= floor
  Matrix active_constraints;  // one independent row per binding constraint
  Matrix cross_term;          // d^2 f / (dx dphi)
  Vector duals;               // multipliers for the rows of active_constraints
  bool regularized = false;
  double shift = 0.0;
};

struct StrictResult {
  Matrix matrix;
  bool adjusted = false;
  double shift = 0.0;
};

ActiveSet detect_active_set(const SolveReport& report, double budget,
                            double activity_tolerance = 1e-6);

// Unit rows for active bounds, an all-ones row for the budget; rows that are
// linearly dependent on earlier ones (pivot tolerance 1e-10) are dropped.
Matrix active_constraint_matrix(const ActiveSet& active, Eigen::Index target_count);

// If the minimum eigenvalue is below `floor`, add (floor - min_eig) I.
StrictResult ensure_strict(const Matrix& hessian, double floor = 1e-6);

struct KktOptions {
  double activity_tolerance = 1e-6;
  double strictness_floor = 1e-6;
};

// The strictness check runs on the Hessian restricted to the active face,
// since only that block enters the bordered system.
KktSystem build_kkt_system(const SolveReport& report, const DefenderProblem& problem,
                           const KktOptions& options = {});

// dx*/dphi from [H A^T; A 0] [dx; dlambda] = [-cross; 0].
Matrix solution_jacobian(const KktSystem& system);

// d DEU(x*(phi_hat); true_phi) / d phi_hat = J^T grad_x DEU(x*; true_phi).
Vector chain_gradient(const SolveReport& report, const DefenderProblem& planning_problem,
                      const Attractiveness& true_phi, const KktOptions& options = {});

}  // namespace ssg
