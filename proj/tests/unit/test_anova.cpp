#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "ml2bf/anova.hpp"
#include "ml2bf/bayesfactors.hpp"
#include "ml2bf/regression.hpp"

using namespace ml2bf;
using anova::AnovaStats;
using anova::Method;

namespace {

// Per-group limit of the log Bayes factor when ||mu_hat||^2 / p -> tau^2 + 1/r.
double limit_rate(Method m, int r, double tau2) {
  const int p = 1'000'000;
  const AnovaStats s{p, r, p * (tau2 + 1.0 / r)};
  return anova::log_bf(s, m) / p;
}

}  // namespace

TEST(AnovaLogBfMl, NoSignal) {
  for (int r : {1, 3, 10}) EXPECT_NEAR(anova::log_bf_ml({7, r, 0.0}), -3.5 * std::log1p(r), 1e-12);
}

TEST(AnovaLogBfMl, ContinuousAtKnot) {
  for (int p : {1, 5, 100, 10000})
    for (int r : {1, 2, 3, 7, 50}) {
      const double knot = 1.0 + 1.0 / r;
      const double expected = -0.5 * p * std::log1p(r) + 0.5 * r;
      EXPECT_NEAR(anova::log_bf_ml({p, r, knot}), expected, 1e-9 * std::max(1.0, std::abs(expected)));
      EXPECT_NEAR(anova::log_bf_ml({p, r, std::nextafter(knot, 1e9)}), expected,
                  1e-9 * std::max(1.0, std::abs(expected)));
    }
}

TEST(AnovaLogBfMl, DominatesFixedNormal) {
  for (int r : {1, 3, 8})
    for (double m = 0.0; m < 20.0; m += 0.13) EXPECT_GE(anova::log_bf_ml({6, r, m}), anova::log_bf_fixed_normal({6, r, m}) - 1e-12);
}

// The general known-variance machinery on the block design, lower bound
// r (X'X)^{-1} = I_p, must reproduce the closed form.
TEST(AnovaLogBfMl, MatchesGeneralMachinery) {
  const int p = 50;
  const int r = 5;
  auto rng = derive_stream(41, 0);
  std::normal_distribution<double> normal;
  Dataset d;
  d.y.resize(p * r);
  d.x = Eigen::MatrixXd::Zero(p * r, p);
  d.x0.resize(p * r, 0);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < r; ++j) {
      d.x(i * r + j, i) = 1.0;
      d.y(i * r + j) = 0.4 * (i % 3) + normal(rng);
    }
  Model all(p);
  for (int i = 0; i < p; ++i) all[static_cast<std::size_t>(i)] = i;
  const SuffStats s = fit_suffstats(d, all);
  Eigen::MatrixXd means = Eigen::Map<Eigen::MatrixXd>(d.y.data(), r, p).transpose();
  const AnovaStats a = anova::stats_from_observations(means);
  EXPECT_NEAR(fit_known_sigma_ml(s, 1.0, r).log_bf, anova::log_bf_ml(a), 1e-8);
  EXPECT_NEAR(log_bf_known_sigma(s, Eigen::MatrixXd::Identity(p, p), 1.0), anova::log_bf_fixed_normal(a), 1e-8);
}

TEST(AnovaLogBfFixedNormal, Values) {
  EXPECT_NEAR(anova::log_bf_fixed_normal({4, 3, 0.0}), -2.0 * std::log(4.0), 1e-12);
  for (double m = 0.0; m <= 1.0 + 1.0 / 3.0; m += 0.01)
    EXPECT_DOUBLE_EQ(anova::log_bf_fixed_normal({4, 3, m}), anova::log_bf_ml({4, 3, m}));
}

TEST(AnovaLogBfFixedNormal, MatchesMonteCarloMarginal) {
  const int p = 3;
  const int r = 2;
  const Eigen::Vector3d mu_hat(0.8, -0.3, 1.1);
  auto rng = derive_stream(42, 0);
  std::normal_distribution<double> normal;
  double sum = 0.0;
  double sum_sq = 0.0;
  const int draws = 2'000'000;
  for (int i = 0; i < draws; ++i) {
    double log_ratio = 0.0;
    for (int g = 0; g < p; ++g) {
      const double mu = normal(rng);
      log_ratio += r * (2.0 * mu * mu_hat(g) - mu * mu) / 2.0;
    }
    const double v = std::exp(log_ratio);
    sum += v;
    sum_sq += v * v;
  }
  const double mean = sum / draws;
  const double se = std::sqrt((sum_sq / draws - mean * mean) / draws);
  EXPECT_LE(std::abs(std::exp(anova::log_bf_fixed_normal({p, r, mu_hat.squaredNorm()})) - mean), 3.0 * se);
}

TEST(AnovaLogBfBic, Values) {
  EXPECT_NEAR(anova::log_bf_bic({10, 4, 0.0}), -5.0 * std::log(4.0), 1e-12);
  EXPECT_NEAR(anova::log_bf_bic({10, 1, 3.0}), 1.5, 1e-12);
}

TEST(AnovaLogBfBic, MatchesLikelihoodDifference) {
  auto rng = derive_stream(43, 0);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd y(6, 4);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 4; ++j) y(i, j) = 0.5 * i + normal(rng);
  const Eigen::VectorXd mu_hat = y.rowwise().mean();
  double ll_full = 0.0;
  double ll_null = 0.0;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 4; ++j) {
      ll_full -= 0.5 * (y(i, j) - mu_hat(i)) * (y(i, j) - mu_hat(i));
      ll_null -= 0.5 * y(i, j) * y(i, j);
    }
  const double expected = ll_full - ll_null - 0.5 * 6 * std::log(4.0);
  EXPECT_NEAR(anova::log_bf_bic(anova::stats_from_observations(y)), expected, 1e-10);
}

TEST(ConsistencyThreshold, QuotedFacts) {
  double sup_fixed = 0.0;
  for (int r = 1; r <= 1000; ++r) sup_fixed = std::max(sup_fixed, anova::consistency_threshold(Method::fixed_normal, r));
  EXPECT_NEAR(sup_fixed, 2.0 * std::log(2.0) - 1.0, 1e-12);
  EXPECT_GT(anova::consistency_threshold(Method::fixed_normal, 4), 0.25);
  for (int r = 5; r <= 1000; ++r) EXPECT_LT(anova::consistency_threshold(Method::fixed_normal, r), 0.25);
  const double e2 = std::exp(2.0);
  EXPECT_NEAR((std::log(e2) - 1.0) / e2, std::exp(-2.0), 1e-15);
  double sup_bic = 0.0;
  for (int r = 1; r <= 1000; ++r) sup_bic = std::max(sup_bic, anova::consistency_threshold(Method::bic_r, r));
  EXPECT_LT(sup_bic, std::exp(-2.0));
  EXPECT_GT(sup_bic, std::exp(-2.0) - 1e-3);
}

TEST(ConsistencyThreshold, BicInconsistentForSmallR) {
  EXPECT_EQ(anova::consistency_threshold(Method::bic_r, 1), 0.0);
  EXPECT_FALSE(anova::consistent_under_null(Method::bic_r, 1));
  EXPECT_FALSE(anova::consistent_under_null(Method::bic_r, 2));
  EXPECT_TRUE(anova::consistent_under_null(Method::bic_r, 3));
  EXPECT_TRUE(anova::consistent_under_null(Method::ml2, 1));
}

// The per-group limit of each log Bayes factor changes sign at the threshold.
TEST(ConsistencyThreshold, SignChangeOfLimit) {
  for (Method m : {Method::fixed_normal, Method::bic_r, Method::ml2})
    for (int r : {3, 5, 10, 40}) {
      const double t = anova::consistency_threshold(m, r);
      if (t <= 0.0) continue;
      EXPECT_LT(limit_rate(m, r, t - 1e-3), 0.0) << anova::method_name(m) << " r=" << r;
      EXPECT_GT(limit_rate(m, r, t + 1e-3), 0.0) << anova::method_name(m) << " r=" << r;
    }
}

TEST(ConsistencyThreshold, RegionOrdering) {
  for (int r = 1; r <= 100; ++r) {
    const double fixed = anova::consistency_threshold(Method::fixed_normal, r);
    const double bic = anova::consistency_threshold(Method::bic_r, r);
    const double ml = anova::consistency_threshold(Method::ml2, r);
    EXPECT_LE(bic, fixed + 1e-15) << r;
    EXPECT_LE(ml, fixed + 1e-15) << r;
    EXPECT_GE(ml, bic - 1e-15) << r;
  }
}

TEST(SimulateConsistency, NullTruthConcentrates) {
  const auto rows = anova::simulate_consistency(std::nullopt, 3, {10, 1000}, 100, 7, {Method::ml2});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_GT(rows[1].avg_prob_true, rows[0].avg_prob_true);
  EXPECT_GT(rows[1].avg_prob_true, 0.99);
}

TEST(SimulateConsistency, ZeroTauMatchesNullMeans) {
  const auto a = anova::simulate_consistency(std::nullopt, 2, {50}, 40, 9, {Method::ml2});
  const auto b = anova::simulate_consistency(anova::AnovaTruth{0.0}, 2, {50}, 40, 9, {Method::ml2});
  EXPECT_NEAR(a[0].avg_prob_true + b[0].avg_prob_true, 1.0, 1e-12);
}

TEST(SimulateConsistency, RejectsBadInput) {
  EXPECT_THROW(anova::simulate_consistency(std::nullopt, 0, {10}, 10, 1, {Method::ml2}), InputError);
  EXPECT_THROW(anova::simulate_consistency(std::nullopt, 2, {0}, 10, 1, {Method::ml2}), InputError);
}
