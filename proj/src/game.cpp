#include "ssg/game.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ssg/errors.hpp"

namespace ssg {

namespace {

void require_same_size(Eigen::Index a, Eigen::Index b, const char* what) {
  if (a != b) {
    throw InvalidArgument(std::string(what) + ": dimension mismatch (" + std::to_string(a) +
                          " vs " + std::to_string(b) + ")");
  }
}

void require_negative_w(double w) {
  if (!(w < 0.0)) throw InvalidArgument("coverage weight w must be negative");
}

// Shared pieces of the SUQR derivatives.
struct SuqrTerms {
  Vector q;        // attack distribution
  Vector payoff;   // a_k = (1 - p_k) u_k
  double deu = 0;  // sum_k a_k q_k
  Vector slope;    // B_k = -u_k + w (a_k - DEU), so g_k = q_k B_k
};

SuqrTerms suqr_terms(const Vector& p, const Vector& phi, double w, const Vector& u) {
  require_negative_w(w);
  require_same_size(p.size(), phi.size(), "coverage/phi");
  require_same_size(p.size(), u.size(), "coverage/defender_values");
  SuqrTerms t;
  t.q = softmax(w * p + phi);
  t.payoff = (1.0 - p.array()) * u.array();
  t.deu = t.payoff.dot(t.q);
  t.slope = -u.array() + w * (t.payoff.array() - t.deu);
  return t;
}

}  // namespace

Coverage::Coverage(Vector probabilities) : p_(std::move(probabilities)) {
  for (Eigen::Index i = 0; i < p_.size(); ++i) {
    if (!std::isfinite(p_[i]) || p_[i] < 0.0 || p_[i] > 1.0) {
      throw InvalidArgument("coverage[" + std::to_string(i) + "] = " + std::to_string(p_[i]) +
                            " outside [0, 1]");
    }
  }
}

Coverage Coverage::uniform(Eigen::Index target_count, double budget) {
  if (target_count <= 0) throw InvalidArgument("uniform coverage: no targets");
  return Coverage(Vector::Constant(target_count, std::min(1.0, budget / target_count)));
}

bool Coverage::feasible(double budget, double tol) const {
  return (p_.array() >= -tol).all() && (p_.array() <= 1.0 + tol).all() && p_.sum() <= budget + tol;
}

AttackDistribution::AttackDistribution(Vector probabilities) : q_(std::move(probabilities)) {
  if (q_.size() == 0) throw InvalidArgument("attack distribution is empty");
  for (Eigen::Index i = 0; i < q_.size(); ++i) {
    if (!std::isfinite(q_[i]) || q_[i] < 0.0) {
      throw InvalidArgument("attack probability [" + std::to_string(i) + "] is invalid");
    }
  }
  if (std::abs(q_.sum() - 1.0) > 1e-9) {
    throw InvalidArgument("attack distribution sums to " + std::to_string(q_.sum()));
  }
}

Attractiveness::Attractiveness(Vector values) : phi_(std::move(values)) {
  if (phi_.size() == 0) throw InvalidArgument("attractiveness is empty");
  if (!phi_.allFinite()) throw InvalidArgument("attractiveness has non-finite entries");
  phi_.array() -= phi_.mean();
}

Attractiveness Attractiveness::zeros(Eigen::Index target_count) {
  return Attractiveness(Vector::Zero(target_count));
}

Attractiveness Attractiveness::from_centered(Vector values) {
  if (values.size() == 0) throw InvalidArgument("attractiveness is empty");
  if (!values.allFinite()) throw InvalidArgument("attractiveness has non-finite entries");
  const double scale = std::max(1.0, values.cwiseAbs().maxCoeff());
  if (std::abs(values.mean()) > 1e-12 * scale) {
    throw InvalidArgument("attractiveness is not mean-centered");
  }
  Attractiveness out;
  out.phi_ = std::move(values);
  return out;
}

void SecurityGame::validate() const {
  const Eigen::Index n = target_count();
  if (n <= 0) throw InvalidArgument("game has no targets");
  if (features.rows() != n) {
    throw InvalidArgument("features has " + std::to_string(features.rows()) + " rows for " +
                          std::to_string(n) + " targets");
  }
  if (!features.allFinite()) throw InvalidArgument("features contain non-finite values");
  if (!defender_values.allFinite() || (defender_values.array() > 0.0).any()) {
    throw InvalidArgument("defender_values must be finite and <= 0");
  }
  if (!(budget > 0.0) || budget > static_cast<double>(n)) {
    throw InvalidArgument("budget must lie in (0, |T|]");
  }
  if (historical_coverage) {
    require_same_size(historical_coverage->size(), n, "historical_coverage");
    if (!historical_coverage->feasible(budget)) {
      throw InvalidArgument("historical_coverage exceeds the budget");
    }
  }
  if (attack_counts) {
    if (!historical_coverage) {
      throw InvalidArgument("attack_counts present without historical_coverage");
    }
    require_same_size(static_cast<Eigen::Index>(attack_counts->size()), n, "attack_counts");
    for (auto c : *attack_counts) {
      if (c < 0) throw InvalidArgument("attack_counts must be nonnegative");
    }
  }
  if (true_phi) require_same_size(true_phi->size(), n, "true_phi");
}

Vector softmax(const Vector& logits) {
  const double m = logits.maxCoeff();
  Vector e = (logits.array() - m).exp();
  return e / e.sum();
}

AttackDistribution suqr_attack_distribution(const Vector& coverage, const Vector& phi, double w) {
  require_negative_w(w);
  require_same_size(coverage.size(), phi.size(), "coverage/phi");
  if (coverage.size() == 0) throw InvalidArgument("empty game");
  return AttackDistribution(softmax(w * coverage + phi));
}

AttackDistribution qr_attack_distribution(const Vector& attacker_values, const Vector& coverage,
                                          double lambda) {
  if (!(lambda > 0.0)) throw InvalidArgument("QR lambda must be positive");
  require_same_size(attacker_values.size(), coverage.size(), "attacker_values/coverage");
  if (coverage.size() == 0) throw InvalidArgument("empty game");
  Vector logits = lambda * ((1.0 - coverage.array()) * attacker_values.array()).matrix();
  return AttackDistribution(softmax(logits));
}

double defender_expected_utility(const Vector& coverage, const Vector& attack,
                                 const Vector& defender_values) {
  require_same_size(coverage.size(), attack.size(), "coverage/attack");
  require_same_size(coverage.size(), defender_values.size(), "coverage/defender_values");
  return ((1.0 - coverage.array()) * attack.array() * defender_values.array()).sum();
}

double suqr_deu(const Vector& coverage, const Vector& phi, double w,
                const Vector& defender_values) {
  return defender_expected_utility(coverage, suqr_attack_distribution(coverage, phi, w).values(),
                                   defender_values);
}

Vector deu_gradient(const Vector& coverage, const Vector& phi, double w,
                    const Vector& defender_values) {
  const SuqrTerms t = suqr_terms(coverage, phi, w, defender_values);
  return t.q.cwiseProduct(t.slope);
}

Matrix deu_hessian(const Vector& coverage, const Vector& phi, double w,
                   const Vector& defender_values) {
  const SuqrTerms t = suqr_terms(coverage, phi, w, defender_values);
  const Eigen::Index n = coverage.size();
  const Vector g = t.q.cwiseProduct(t.slope);
  Matrix h(n, n);
  // H_kj = w q_k (delta_kj - q_j) B_k - w q_k u_k delta_kj - w q_k g_j
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double delta = k == j ? 1.0 : 0.0;
      h(k, j) = w * t.q[k] * ((delta - t.q[j]) * t.slope[k] - defender_values[k] * delta - g[j]);
    }
  }
  return 0.5 * (h + h.transpose());
}

Matrix deu_coverage_phi_derivative(const Vector& coverage, const Vector& phi, double w,
                                   const Vector& defender_values) {
  const SuqrTerms t = suqr_terms(coverage, phi, w, defender_values);
  const Eigen::Index n = coverage.size();
  Matrix c(n, n);
  // C_kj = q_k (delta_kj - q_j) B_k - w q_k q_j (a_j - DEU)
  for (Eigen::Index k = 0; k < n; ++k) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double delta = k == j ? 1.0 : 0.0;
      c(k, j) = t.q[k] * ((delta - t.q[j]) * t.slope[k] - w * t.q[j] * (t.payoff[j] - t.deu));
    }
  }
  return c;
}

AttackDistribution empirical_attack_distribution(std::span<const std::int64_t> attack_counts) {
  if (attack_counts.empty()) throw InvalidArgument("no attack counts");
  Vector q(static_cast<Eigen::Index>(attack_counts.size()));
  double total = 0.0;
  for (std::size_t i = 0; i < attack_counts.size(); ++i) {
    if (attack_counts[i] < 0) throw InvalidArgument("negative attack count");
    q[static_cast<Eigen::Index>(i)] = static_cast<double>(attack_counts[i]);
    total += q[static_cast<Eigen::Index>(i)];
  }
  if (total <= 0.0) throw InvalidArgument("attack counts are all zero");
  return AttackDistribution(q / total);
}

double cross_entropy_loss(const AttackDistribution& predicted, const AttackDistribution& empirical) {
  require_same_size(predicted.size(), empirical.size(), "predicted/empirical");
  double loss = 0.0;
  for (Eigen::Index i = 0; i < predicted.size(); ++i) {
    if (empirical[i] == 0.0) continue;
    if (predicted[i] <= 0.0) {
      throw InvalidArgument("zero predicted probability on target " + std::to_string(i) +
                            " with observed attacks");
    }
    loss -= empirical[i] * std::log(predicted[i]);
  }
  return loss;
}

double entropy(const AttackDistribution& distribution) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < distribution.size(); ++i) {
    if (distribution[i] > 0.0) h -= distribution[i] * std::log(distribution[i]);
  }
  return h;
}

}  // namespace ssg
