#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace ssg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Marginal defender coverage, one probability per target in [0, 1].
// Budget feasibility depends on the game and is checked by `feasible`.
class Coverage {
 public:
  Coverage() = default;
  explicit Coverage(Vector probabilities);

  static Coverage uniform(Eigen::Index target_count, double budget);

  const Vector& values() const { return p_; }
  operator const Vector&() const { return p_; }
  Eigen::Index size() const { return p_.size(); }
  double operator[](Eigen::Index i) const { return p_[i]; }

  bool feasible(double budget, double tol = 1e-9) const;

 private:
  Vector p_;
};

// Probability vector over targets. Empirical distributions may contain
// zeros; model outputs are strictly positive.
class AttackDistribution {
 public:
  AttackDistribution() = default;
  explicit AttackDistribution(Vector probabilities);

  const Vector& values() const { return q_; }
  operator const Vector&() const { return q_; }
  Eigen::Index size() const { return q_.size(); }
  double operator[](Eigen::Index i) const { return q_[i]; }

 private:
  Vector q_;
};

// Per-target attractiveness phi(y_i), stored mean-centered: phi is only
// identified up to an additive constant.
class Attractiveness {
 public:
  Attractiveness() = default;
  // Centers the input.
  explicit Attractiveness(Vector values);

  static Attractiveness zeros(Eigen::Index target_count);
  // Keeps the values bit-for-bit; throws unless their mean is already ~0.
  static Attractiveness from_centered(Vector values);

  const Vector& values() const { return phi_; }
  operator const Vector&() const { return phi_; }
  Eigen::Index size() const { return phi_.size(); }
  double operator[](Eigen::Index i) const { return phi_[i]; }

 private:
  Vector phi_;
};

// One game instance. Training games carry historical coverage and attack
// counts; test games carry an evaluation attractiveness.
struct SecurityGame {
  Matrix features;          // |T| x F
  Vector defender_values;   // u_d <= 0, value of a successful attack
  double budget = 1.0;
  std::optional<Coverage> historical_coverage;
  std::optional<std::vector<std::int64_t>> attack_counts;
  std::optional<Attractiveness> true_phi;

  Eigen::Index target_count() const { return defender_values.size(); }
  Eigen::Index feature_count() const { return features.cols(); }

  // Throws InvalidArgument describing the first violated invariant.
  void validate() const;
};

// q_i = exp(w p_i + phi_i) / sum_j exp(w p_j + phi_j), w < 0.
AttackDistribution suqr_attack_distribution(const Vector& coverage, const Vector& phi, double w);

// q_i proportional to exp(lambda (1 - p_i) u_a(i)), lambda > 0.
AttackDistribution qr_attack_distribution(const Vector& attacker_values, const Vector& coverage,
                                          double lambda);

// sum_i (1 - p_i) q_i u_d(i).
double defender_expected_utility(const Vector& coverage, const Vector& attack,
                                 const Vector& defender_values);

// DEU under SUQR, with the attack distribution evaluated at `coverage`.
double suqr_deu(const Vector& coverage, const Vector& phi, double w, const Vector& defender_values);

// d DEU / d p with the attack response depending on p:
//   g_k = q_k [ -u_k + w ((1 - p_k) u_k - DEU) ].
Vector deu_gradient(const Vector& coverage, const Vector& phi, double w,
                    const Vector& defender_values);

// d^2 DEU / dp^2, symmetrized.
Matrix deu_hessian(const Vector& coverage, const Vector& phi, double w,
                   const Vector& defender_values);

// Mixed partial d^2 DEU / (dp_k dphi_j), row k, column j. Rows sum to zero
// (shifting phi by a constant does not move the gradient).
Matrix deu_coverage_phi_derivative(const Vector& coverage, const Vector& phi, double w,
                                   const Vector& defender_values);

AttackDistribution empirical_attack_distribution(std::span<const std::int64_t> attack_counts);

// -sum_i empirical_i log(predicted_i). Terms with zero empirical mass are
// skipped; a zero prediction under positive empirical mass throws.
double cross_entropy_loss(const AttackDistribution& predicted, const AttackDistribution& empirical);

double entropy(const AttackDistribution& distribution);

// Numerically stable softmax (max-subtracted).
Vector softmax(const Vector& logits);

}  // namespace ssg
