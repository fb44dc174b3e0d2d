#include "ssg/diffopt.hpp"

#include <string>

#include "ssg/errors.hpp"

namespace ssg {

namespace {

constexpr double kPivotTolerance = 1e-10;

Eigen::Index rank_of(const Matrix& rows) {
  if (rows.rows() == 0) return 0;
  Eigen::ColPivHouseholderQR<Matrix> qr(rows.transpose());
  qr.setThreshold(kPivotTolerance);
  return qr.rank();
}

// Orthonormal basis of {d : A d = 0}.
Matrix null_space(const Matrix& a, Eigen::Index n) {
  if (a.rows() == 0) return Matrix::Identity(n, n);
  Eigen::HouseholderQR<Matrix> qr(a.transpose());
  const Matrix q = qr.householderQ();
  return q.rightCols(n - a.rows());
}

}  // namespace

ActiveSet detect_active_set(const SolveReport& report, double budget, double activity_tolerance) {
  const Vector& x = report.coverage.values();
  ActiveSet active;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const bool low = x[i] <= activity_tolerance;
    const bool high = x[i] >= 1.0 - activity_tolerance;
    if (low && high) {
      throw InvalidArgument("coverage[" + std::to_string(i) +
                            "] is within tolerance of both bounds");
    }
    if (low) active.lower.push_back(static_cast<int>(i));
    if (high) active.upper.push_back(static_cast<int>(i));
  }
  active.budget = x.sum() >= budget - activity_tolerance;
  return active;
}

Matrix active_constraint_matrix(const ActiveSet& active, Eigen::Index target_count) {
  std::vector<Vector> candidates;
  for (int i : active.lower) {
    Vector row = Vector::Zero(target_count);
    row[i] = -1.0;
    candidates.push_back(std::move(row));
  }
  for (int i : active.upper) {
    Vector row = Vector::Zero(target_count);
    row[i] = 1.0;
    candidates.push_back(std::move(row));
  }
  if (active.budget) candidates.push_back(Vector::Ones(target_count));

  Matrix kept(0, target_count);
  for (const Vector& row : candidates) {
    Matrix grown(kept.rows() + 1, target_count);
    grown << kept, row.transpose();
    if (rank_of(grown) > kept.rows()) kept = std::move(grown);
  }
  return kept;
}

StrictResult ensure_strict(const Matrix& hessian, double floor) {
  StrictResult out{hessian, false, 0.0};
  if (hessian.size() == 0) return out;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(hessian, Eigen::EigenvaluesOnly);
  const double min_eig = eig.eigenvalues().minCoeff();
  if (min_eig < floor) {
    out.shift = floor - min_eig;
    out.matrix.diagonal().array() += out.shift;
    out.adjusted = true;
  }
  return out;
}

KktSystem build_kkt_system(const SolveReport& report, const DefenderProblem& problem,
                           const KktOptions& options) {
  problem.validate();
  const Vector& x = report.coverage.values();
  const Eigen::Index n = problem.target_count();
  if (x.size() != n) throw InvalidArgument("build_kkt_system: report/problem mismatch");

  KktSystem system;
  const ActiveSet active = detect_active_set(report, problem.budget, options.activity_tolerance);
  system.active_constraints = active_constraint_matrix(active, n);
  system.hessian = -deu_hessian(x, problem.phi, problem.w, problem.defender_values);
  system.cross_term =
      -deu_coverage_phi_derivative(x, problem.phi, problem.w, problem.defender_values);

  const Matrix& a = system.active_constraints;
  if (a.rows() < n) {
    const Matrix z = null_space(a, n);
    const StrictResult strict =
        ensure_strict(z.transpose() * system.hessian * z, options.strictness_floor);
    if (strict.adjusted) {
      system.hessian.diagonal().array() += strict.shift;
      system.regularized = true;
      system.shift = strict.shift;
    }
  }

  // grad f + A^T mu = 0, with grad f = -grad DEU.
  if (a.rows() > 0) {
    const Vector grad_f = -problem.gradient(x);
    system.duals = a.transpose().colPivHouseholderQr().solve(-grad_f);
  }
  return system;
}

Matrix solution_jacobian(const KktSystem& system) {
  const Eigen::Index n = system.hessian.rows();
  const Eigen::Index m = system.active_constraints.rows();
  const Eigen::Index k = system.cross_term.cols();
  Matrix bordered = Matrix::Zero(n + m, n + m);
  bordered.topLeftCorner(n, n) = system.hessian;
  if (m > 0) {
    bordered.topRightCorner(n, m) = system.active_constraints.transpose();
    bordered.bottomLeftCorner(m, n) = system.active_constraints;
  }
  Matrix rhs = Matrix::Zero(n + m, k);
  rhs.topRows(n) = -system.cross_term;

  Eigen::PartialPivLU<Matrix> lu(bordered);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14)) {
    throw SingularSystemError("KKT system is singular", rcond);
  }
  return lu.solve(rhs).topRows(n);
}

Vector chain_gradient(const SolveReport& report, const DefenderProblem& planning_problem,
                      const Attractiveness& true_phi, const KktOptions& options) {
  if (true_phi.size() != planning_problem.target_count()) {
    throw InvalidArgument("chain_gradient: true_phi has wrong dimension");
  }
  const Matrix jacobian = solution_jacobian(build_kkt_system(report, planning_problem, options));
  const Vector outer = deu_gradient(report.coverage.values(), true_phi.values(), planning_problem.w,
                                    planning_problem.defender_values);
  return jacobian.transpose() * outer;
}

}  // namespace ssg
