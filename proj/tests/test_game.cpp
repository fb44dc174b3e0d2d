#include <gtest/gtest.h>

#include <cmath>

#include "ssg/errors.hpp"
#include "ssg/game.hpp"
#include "ssg/random.hpp"
#include "test_util.hpp"

using namespace ssg;
using ssg::test::random_coverage;
using ssg::test::random_vector;
using ssg::test::relative_error;
using ssg::test::vec;

TEST(Suqr, SymmetricCoverageGivesUniform) {
  const AttackDistribution q = suqr_attack_distribution(vec({0, 0}), vec({0, 0}), -4.0);
  EXPECT_DOUBLE_EQ(q[0], 0.5);
  EXPECT_DOUBLE_EQ(q[1], 0.5);
}

TEST(Suqr, FullCoverageOnOneTarget) {
  const AttackDistribution q = suqr_attack_distribution(vec({1, 0}), vec({0, 0}), -1.0);
  const double expected = 1.0 / (1.0 + std::exp(1.0));
  EXPECT_NEAR(q[0], expected, 1e-15);
  EXPECT_NEAR(q[0], 0.268941, 1e-6);
  EXPECT_NEAR(q[1], 0.731059, 1e-6);
}

TEST(Suqr, ConstantAttractivenessAndCoverage) {
  for (double c : {-3.0, 0.0, 7.5}) {
    for (double w : {-0.1, -4.0, -20.0}) {
      const AttackDistribution q =
          suqr_attack_distribution(vec({0.3, 0.3, 0.3}), vec({c, c, c}), w);
      for (int i = 0; i < 3; ++i) EXPECT_NEAR(q[i], 1.0 / 3.0, 1e-15);
    }
  }
}

TEST(Suqr, RejectsNonnegativeWeightAndMismatch) {
  EXPECT_THROW(suqr_attack_distribution(vec({0, 0}), vec({0, 0}), 0.0), InvalidArgument);
  EXPECT_THROW(suqr_attack_distribution(vec({0, 0}), vec({0, 0}), 1.0), InvalidArgument);
  EXPECT_THROW(suqr_attack_distribution(vec({0, 0}), vec({0, 0, 0}), -1.0), InvalidArgument);
}

TEST(Suqr, NormalizedPositiveAndGaugeInvariant) {
  Rng rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(50));
    const Vector p = random_coverage(n, rng);
    const Vector phi = random_vector(n, rng, -20, 20);
    const double w = rng.uniform(-30, -1e-3);
    const Vector q = suqr_attack_distribution(p, phi, w);
    EXPECT_NEAR(q.sum(), 1.0, 1e-12);
    EXPECT_GT(q.minCoeff(), 0.0);
    const double c = rng.uniform(-50, 50);
    const Vector shifted = suqr_attack_distribution(p, (phi.array() + c).matrix(), w);
    EXPECT_LE((shifted - q).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Suqr, LargeAttractivenessStaysFinite) {
  const Vector q = suqr_attack_distribution(vec({0.1, 0.5, 0.9}), vec({700, -700, 699}), -4.0);
  EXPECT_TRUE(q.allFinite());
  EXPECT_NEAR(q.sum(), 1.0, 1e-12);
}

TEST(Qr, SymmetricAndLimit) {
  const Vector q = qr_attack_distribution(vec({1, 1}), vec({0.5, 0.5}), 1.0);
  EXPECT_DOUBLE_EQ(q[0], 0.5);
  const Vector sharp = qr_attack_distribution(vec({1, 0}), vec({0, 0}), 50.0);
  EXPECT_GE(sharp[0], 1.0 - 1e-15);
  EXPECT_THROW(qr_attack_distribution(vec({1, 0}), vec({0, 0}), 0.0), InvalidArgument);
}

TEST(Deu, HandValues) {
  EXPECT_DOUBLE_EQ(defender_expected_utility(vec({0.5, 0.5}), vec({0.5, 0.5}), vec({-1, -1})), -0.5);
  EXPECT_DOUBLE_EQ(defender_expected_utility(vec({1, 1}), vec({0.3, 0.7}), vec({-4, -2})), 0.0);
  EXPECT_DOUBLE_EQ(defender_expected_utility(vec({0.2, 0.1}), vec({0.3, 0.7}), vec({0, 0})), 0.0);
  EXPECT_THROW(defender_expected_utility(vec({0.5}), vec({0.5, 0.5}), vec({-1, -1})), InvalidArgument);
}

TEST(Deu, NonpositiveAndMonotoneInValues) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(10));
    const Vector p = random_coverage(n, rng);
    const Vector q = suqr_attack_distribution(p, random_vector(n, rng, -3, 3), -4.0);
    Vector u = random_vector(n, rng, -10, 0);
    const double base = defender_expected_utility(p, q, u);
    EXPECT_LE(base, 0.0);
    const int k = static_cast<int>(rng.below(n));
    u[k] -= rng.uniform(0, 5);
    EXPECT_LE(defender_expected_utility(p, q, u), base + 1e-15);
  }
}

// Central differences of suqr_deu.
Vector fd_gradient(const Vector& p, const Vector& phi, double w, const Vector& u, double h) {
  Vector g(p.size());
  for (Eigen::Index k = 0; k < p.size(); ++k) {
    Vector a = p, b = p;
    a[k] += h;
    b[k] -= h;
    g[k] = (suqr_deu(a, phi, w, u) - suqr_deu(b, phi, w, u)) / (2 * h);
  }
  return g;
}

TEST(DeuGradient, MatchesFiniteDifferences) {
  Rng rng(3);
  double worst = 0.0;
  for (int trial = 0; trial < 40; ++trial) {
    const int n = trial % 2 == 0 ? 2 : 8;
    const Vector p = random_coverage(n, rng);
    const Vector phi = random_vector(n, rng, -2, 2);
    const Vector u = random_vector(n, rng, -10, 0);
    const double w = rng.uniform(-8, -0.5);
    const Vector g = deu_gradient(p, phi, w, u);
    const Vector fd = fd_gradient(p, phi, w, u, 1e-5);
    worst = std::max(worst, relative_error(g, fd));
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(DeuGradient, ZeroValuesAndWeakCoverageWeight) {
  const Vector p = vec({0.2, 0.5, 0.1});
  const Vector phi = vec({0.3, -0.1, -0.2});
  EXPECT_EQ(deu_gradient(p, phi, -4.0, Vector::Zero(3)).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_THROW(deu_gradient(p, phi, -0.0, vec({-1, -2, -3})), InvalidArgument);
  const Vector u = vec({-1, -2, -3});
  const Vector q = suqr_attack_distribution(p, phi, -1e-9);
  const Vector g = deu_gradient(p, phi, -1e-9, u);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(g[k], -q[k] * u[k], 1e-6);
}

TEST(DeuHessian, MatchesFiniteDifferencesOfGradient) {
  Rng rng(4);
  double worst = 0.0;
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(7));
    const Vector p = random_coverage(n, rng);
    const Vector phi = random_vector(n, rng, -2, 2);
    const Vector u = random_vector(n, rng, -10, 0);
    const double w = rng.uniform(-8, -0.5);
    const Matrix H = deu_hessian(p, phi, w, u);
    Matrix fd(n, n);
    const double h = 1e-5;
    for (int j = 0; j < n; ++j) {
      Vector a = p, b = p;
      a[j] += h;
      b[j] -= h;
      fd.col(j) = (deu_gradient(a, phi, w, u) - deu_gradient(b, phi, w, u)) / (2 * h);
    }
    worst = std::max(worst, relative_error(H, fd));
    EXPECT_LE((H - H.transpose()).cwiseAbs().maxCoeff(), 1e-10);
  }
  EXPECT_LE(worst, 1e-4);
  EXPECT_EQ(deu_hessian(vec({0.2, 0.3}), vec({0.1, -0.1}), -4.0, Vector::Zero(2)).norm(), 0.0);
}

TEST(DeuCrossTerm, MatchesFiniteDifferencesInPhi) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(6));
    const Vector p = random_coverage(n, rng);
    const Vector phi = random_vector(n, rng, -2, 2);
    const Vector u = random_vector(n, rng, -10, 0);
    const double w = rng.uniform(-8, -0.5);
    const Matrix C = deu_coverage_phi_derivative(p, phi, w, u);
    Matrix fd(n, n);
    const double h = 1e-5;
    for (int j = 0; j < n; ++j) {
      Vector a = phi, b = phi;
      a[j] += h;
      b[j] -= h;
      fd.col(j) = (deu_gradient(p, a, w, u) - deu_gradient(p, b, w, u)) / (2 * h);
    }
    EXPECT_LE(relative_error(C, fd), 1e-5);
    EXPECT_LE(C.rowwise().sum().cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Empirical, Ratios) {
  const std::vector<std::int64_t> a{3, 1}, b{5, 5, 5, 5}, c{0, 10}, zero{0, 0};
  EXPECT_DOUBLE_EQ(empirical_attack_distribution(a)[0], 0.75);
  EXPECT_DOUBLE_EQ(empirical_attack_distribution(a)[1], 0.25);
  for (int i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(empirical_attack_distribution(b)[i], 0.25);
  EXPECT_DOUBLE_EQ(empirical_attack_distribution(c)[0], 0.0);
  EXPECT_DOUBLE_EQ(empirical_attack_distribution(c)[1], 1.0);
  EXPECT_THROW(empirical_attack_distribution(zero), InvalidArgument);
}

TEST(CrossEntropy, KnownValuesAndErrors) {
  const AttackDistribution uniform(Vector::Constant(4, 0.25));
  EXPECT_NEAR(cross_entropy_loss(uniform, uniform), std::log(4.0), 1e-15);
  EXPECT_NEAR(cross_entropy_loss(AttackDistribution(vec({1 - 1e-12, 1e-12})),
                                 AttackDistribution(vec({1, 0}))),
              1e-12, 1e-16);
  EXPECT_THROW(cross_entropy_loss(AttackDistribution(vec({1, 0})), AttackDistribution(vec({0.5, 0.5}))),
               InvalidArgument);
}

TEST(CrossEntropy, GibbsInequality) {
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(10));
    const AttackDistribution a(softmax(random_vector(n, rng, -3, 3)));
    const AttackDistribution b(softmax(random_vector(n, rng, -3, 3)));
    EXPECT_GE(cross_entropy_loss(a, b), entropy(b) - 1e-12);
    EXPECT_NEAR(cross_entropy_loss(b, b), entropy(b), 1e-12);
  }
}

TEST(Types, ValidationRules) {
  EXPECT_THROW(Coverage(vec({0.5, 1.2})), InvalidArgument);
  EXPECT_THROW(AttackDistribution(vec({0.5, 0.6})), InvalidArgument);
  EXPECT_NEAR(Attractiveness(vec({1, 2, 3})).values().sum(), 0.0, 1e-15);
  EXPECT_THROW(Attractiveness::from_centered(vec({1, 2})), InvalidArgument);
  EXPECT_FALSE(Coverage(vec({0.7, 0.7})).feasible(1.0));

  SecurityGame game;
  game.features = Matrix::Zero(2, 3);
  game.defender_values = vec({-1, 0});
  game.budget = 1.0;
  EXPECT_NO_THROW(game.validate());
  game.defender_values = vec({-1, 0.5});
  EXPECT_THROW(game.validate(), InvalidArgument);
  game.defender_values = vec({-1, 0});
  game.budget = 3.0;
  EXPECT_THROW(game.validate(), InvalidArgument);
  game.budget = 1.0;
  game.attack_counts = std::vector<std::int64_t>{1, 2};
  EXPECT_THROW(game.validate(), InvalidArgument);
}
