#include <gtest/gtest.h>

#include <cmath>

#include "ssg/errors.hpp"
#include "ssg/theory.hpp"
#include "test_util.hpp"

using namespace ssg;
using namespace ssg::theory;
using ssg::test::vec;

TEST(BestResponse, Examples) {
  EXPECT_EQ(rational_best_response(vec({0.6, 0.4}), vec({0, 0})), 0);
  EXPECT_EQ(rational_best_response(vec({0.6, 0.4}), vec({0.6, 0.4})), 0);
  EXPECT_EQ(rational_best_response(vec({0.4, 0.6}), vec({0.4, 0.6})), 1);  // tie, larger value
  EXPECT_EQ(rational_best_response(vec({0.5, 0.5}), vec({0.9, 0.0})), 1);
  EXPECT_EQ(rational_best_response(vec({0.5, 0.5}), vec({0.3, 0.3})), 0);  // full tie, lower index
  EXPECT_THROW(rational_best_response(Vector(0), Vector(0)), InvalidArgument);
}

TEST(RationalCoverage, ClosedForm) {
  for (auto [z0, deu] : {std::pair{0.5, -0.25}, std::pair{0.7, -0.21}, std::pair{1.0, 0.0}}) {
    const RationalSolution s = optimal_rational_coverage(z0, 1 - z0);
    EXPECT_DOUBLE_EQ(s.coverage[0], z0);
    EXPECT_NEAR(s.deu, deu, 1e-15);
  }
}

// Brute force over a coverage grid: the rational attacker best-responds and
// the defender keeps the best realized utility.
TEST(RationalCoverage, MatchesGridSearch) {
  for (double z0 : {0.5, 0.6, 0.75, 0.9}) {
    const Vector values = vec({z0, 1 - z0});
    double best = -1.0;
    for (int k = 0; k <= 10000; ++k) {
      const double p = k / 10000.0;
      const Vector cov = vec({p, 1 - p});
      const int j = rational_best_response(values, cov);
      best = std::max(best, -(1 - cov[j]) * values[j]);
    }
    EXPECT_NEAR(best, optimal_rational_coverage(z0, 1 - z0).deu, 1e-12);
  }
}

TEST(Theorem1, RatioExamples) {
  EXPECT_NEAR(theorem1_ratio(TwoTargetGame::make(0.6, 0.1)), 15.0 / 14.0, 1e-15);
  EXPECT_NEAR(theorem1_ratio(TwoTargetGame::make(0.6, 0.1)), 1.0714286, 1e-7);
  EXPECT_NEAR(theorem1_ratio(TwoTargetGame::make(0.8, 0.0)), 1.0, 1e-15);
  EXPECT_NEAR(theorem1_ratio(TwoTargetGame::make(0.5, 0.2)), 1.0, 1e-15);
  EXPECT_THROW(theorem1_ratio(TwoTargetGame::make(0.8, 0.3)), InvalidArgument);
  EXPECT_THROW(TwoTargetGame::make(0.4, 0.1), InvalidArgument);
}

TEST(Theorem1, WorkedExampleEnumeration) {
  const Theorem1Report r = theorem1_verify(TwoTargetGame::make(0.6, 0.1));
  EXPECT_NEAR(r.worst_deu, -0.30, 1e-15);
  EXPECT_NEAR(r.best_deu, -0.28, 1e-15);
  EXPECT_NEAR(r.enumerated_ratio, 15.0 / 14.0, 1e-12);
  EXPECT_TRUE(r.passed);
  const Theorem1Report zero = theorem1_verify(TwoTargetGame::make(0.6, 0.0));
  EXPECT_EQ(zero.enumerated_ratio, 1.0);
}

TEST(Theorem1, EnumerationMatchesFormulaEverywhere) {
  Rng rng(50);
  for (int i = 0; i < 500; ++i) {
    const double z0 = rng.uniform(0.5, 1.0);
    const TwoTargetGame g = TwoTargetGame::make(z0, rng.uniform(0.0, 1.0 - z0));
    const Theorem1Report r = theorem1_verify(g);
    EXPECT_TRUE(r.passed);
    EXPECT_GE(r.formula_ratio, 1.0 - 1e-12);
  }
}

TEST(Theorem1, WrongFormulaIsCaught) {
  const auto inverted = [](const TwoTargetGame& g) { return 1.0 / theorem1_ratio(g); };
  EXPECT_FALSE(theorem1_verify(TwoTargetGame::make(0.6, 0.1), inverted).passed);
  TheoryConfig config;
  config.ratio_formula = inverted;
  const TheoryReport report = verify_theory(config);
  EXPECT_FALSE(report.passed());
  bool named = false;
  for (const auto& c : report.checks) {
    if (!c.passed) {
      EXPECT_EQ(c.name.rfind("theorem1", 0), 0u) << c.name;
      named = true;
    }
  }
  EXPECT_TRUE(named);
  EXPECT_NE(report.to_text().find("FAIL theorem1"), std::string::npos);
}

TEST(Theorem2, LambdaBound) {
  EXPECT_NEAR(theorem2_lambda_bound(0.5, 0.1), 40.0 * std::log(20.0), 1e-12);
  EXPECT_NEAR(theorem2_lambda_bound(0.5, 0.1), 119.8293, 1e-4);
  // (1 - alpha) eps = 0.99
  EXPECT_NEAR(theorem2_lambda_bound(0.01, 1.0), 2.0 / 0.99 * std::log(1.0 / 0.99), 1e-15);
  EXPECT_NEAR(theorem2_lambda_bound(0.01, 1.0), 0.02030, 1e-5);
  EXPECT_LT(theorem2_lambda_bound(0.0, 0.1), theorem2_lambda_bound(0.9, 0.1));
  EXPECT_THROW(theorem2_lambda_bound(0.5, 0.0), InvalidArgument);
  EXPECT_THROW(theorem2_lambda_bound(0.0, 1.0), InvalidArgument);
}

TEST(Theorem2, WorkedExampleAndLimits) {
  const Theorem2Report r = theorem2_verify(0.5, 0.1, 1e-4);
  EXPECT_TRUE(r.coverage_ok);
  EXPECT_LE(r.qr_optimal_coverage, 0.95 + 1e-4);
  EXPECT_TRUE(r.loss_ok);
  const Theorem2Report sharp = theorem2_verify(0.5, 0.1, 1e-4, 10.0);
  EXPECT_NEAR(sharp.qr_optimal_coverage, 0.9, 1e-2);
  EXPECT_LT(theorem2_verify(0.5, 1e-3, 1e-4).loss_bound, 1e-3);
  EXPECT_THROW(theorem2_verify(0.4, 0.1, 1e-4), InvalidArgument);
}

TEST(Theorem2, GridMinimizerIsExactToResolution) {
  // A finer grid never finds a loss more than the coarse step allows.
  const double lambda = theorem2_lambda_bound(0.6, 0.3);
  const double coarse = qr_optimal_coverage(0.7, 0.3, lambda, 1e-3);
  const double fine = qr_optimal_coverage(0.7, 0.3, lambda, 1e-5);
  EXPECT_NEAR(coarse, fine, 1e-3);
}

TEST(VerifyTheory, DefaultRunPasses) {
  const TheoryReport report = verify_theory();
  EXPECT_TRUE(report.passed()) << report.to_text();
  EXPECT_NE(report.to_text().find("15/14"), std::string::npos);
  EXPECT_EQ(report.checks.size(), 7u);
}
