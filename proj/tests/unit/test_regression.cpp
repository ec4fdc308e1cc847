#include <gtest/gtest.h>

#include <Eigen/Dense>

#include "ml2bf/errors.hpp"
#include "ml2bf/regression.hpp"
#include "support.hpp"

using namespace ml2bf;

namespace {

Eigen::MatrixXd ar1_target(int p, double rho) {
  Eigen::MatrixXd r(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) r(i, j) = std::pow(rho, std::abs(i - j));
  return r;
}

}  // namespace

TEST(Orthogonalize, CentersUnderIntercept) {
  Eigen::MatrixXd x(4, 2);
  x << 4, -2, 2, 0, 3, -1, 3, -1;
  const Dataset d = orthogonalize(with_intercept(Eigen::VectorXd::Ones(4), x));
  EXPECT_NEAR(d.x.col(0).mean(), 0.0, 1e-14);
  EXPECT_NEAR(d.x.col(1).mean(), 0.0, 1e-14);
}

TEST(Orthogonalize, IdempotentOnOrthogonalInput) {
  auto rng = derive_stream(3, 0);
  const Dataset once = fixtures::random_dataset(rng, 12, 3);
  const Dataset twice = orthogonalize(once);
  EXPECT_LE((twice.x - once.x).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_EQ(twice.y, once.y);
}

TEST(Orthogonalize, TwoCommonPredictors) {
  auto rng = derive_stream(5, 0);
  Dataset d;
  d.y = standard_normal_matrix(rng, 20, 1).col(0);
  d.x = standard_normal_matrix(rng, 20, 3);
  d.x0.resize(20, 2);
  for (int i = 0; i < 20; ++i) d.x0.row(i) << 1.0, i / 19.0;
  const Dataset o = orthogonalize(d);
  EXPECT_LE((o.x0.transpose() * o.x).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Orthogonalize, RejectsDegenerateCommonPredictors) {
  Dataset d;
  d.y = Eigen::VectorXd::Ones(5);
  d.x = Eigen::MatrixXd::Random(5, 2);
  d.x0 = Eigen::MatrixXd::Ones(5, 2);
  EXPECT_THROW(orthogonalize(d), NumericalError);
}

TEST(FitSuffstats, NullSignal) {
  Eigen::MatrixXd x(5, 1);
  x << 1, -1, 2, 0, -2;
  const Dataset d = orthogonalize(with_intercept(Eigen::VectorXd::Constant(5, 3.0), x));
  const SuffStats s = fit_suffstats(d, {0});
  EXPECT_NEAR(s.ssr, 0.0, 1e-20);
  EXPECT_NEAR(s.r2, 0.0, 1e-20);
}

TEST(FitSuffstats, PerfectFit) {
  Eigen::MatrixXd x(6, 1);
  x << 1, -1, 2, 0, -2, 5;
  const Dataset d = orthogonalize(with_intercept(x.col(0), x));
  const SuffStats s = fit_suffstats(d, {0});
  EXPECT_NEAR(s.r2, 1.0, 1e-14);
  EXPECT_NEAR(s.sse, 0.0, 1e-20);
}

TEST(FitSuffstats, EmptyModel) {
  auto rng = derive_stream(7, 0);
  const Dataset d = fixtures::random_dataset(rng, 15, 2);
  const SuffStats s = fit_suffstats(d, {});
  EXPECT_EQ(s.p_i, 0);
  EXPECT_EQ(s.ssr, 0.0);
  EXPECT_EQ(s.r2, 0.0);
  EXPECT_NEAR(s.sse, (d.y.array() - d.y.mean()).matrix().squaredNorm(), 1e-10);
}

TEST(FitSuffstats, InsufficientSampleSize) {
  auto rng = derive_stream(7, 1);
  const Dataset d = fixtures::random_dataset(rng, 4, 3);
  EXPECT_THROW(fit_suffstats(d, {0, 1, 2}), InputError);
}

TEST(FitSuffstats, RankDeficientColumns) {
  auto rng = derive_stream(7, 2);
  Dataset d = fixtures::random_dataset(rng, 10, 2);
  d.x.col(1) = 2.0 * d.x.col(0);
  EXPECT_THROW(fit_suffstats(d, {0, 1}), NumericalError);
}

// Normal equations solved in long double as an independent oracle.
TEST(FitSuffstats, MatchesExtendedPrecisionNormalEquations) {
  auto rng = derive_stream(11, 0);
  const Eigen::MatrixXd x = make_correlated_design(50, 8, CorrelationSpec::ar1(0.9), rng);
  std::normal_distribution<double> normal;
  Eigen::VectorXd y(50);
  for (int i = 0; i < 50; ++i) y(i) = 2.0 + x.row(i).sum() * 0.3 + normal(rng);
  const Dataset d = orthogonalize(with_intercept(y, x));
  const SuffStats s = fit_suffstats(d, fixtures::first_columns(8));

  using Mat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<long double, Eigen::Dynamic, 1>;
  Mat xf(50, 9);
  xf.col(0).setOnes();
  xf.rightCols(8) = x.cast<long double>();
  const Vec yl = y.cast<long double>();
  const Vec coef = (xf.transpose() * xf).ldlt().solve(xf.transpose() * yl);
  const long double sse = (yl - xf * coef).squaredNorm();
  const long double mean = yl.mean();
  const long double tss = (yl.array() - mean).matrix().squaredNorm();
  EXPECT_NEAR(s.sse, static_cast<double>(sse), 1e-8 * static_cast<double>(sse));
  EXPECT_NEAR(s.ssr, static_cast<double>(tss - sse), 1e-8 * static_cast<double>(tss - sse));
  for (int j = 0; j < 8; ++j) EXPECT_NEAR(s.beta_hat(j), static_cast<double>(coef(j + 1)), 1e-8);
}

TEST(FitSuffstats, TypeInvariants) {
  auto rng = derive_stream(13, 0);
  const Dataset d = fixtures::random_dataset(rng, 30, 5);
  const SuffStats s = fit_suffstats(d, {0, 2, 4});
  const double tss = (d.y.array() - d.y.mean()).matrix().squaredNorm();
  EXPECT_NEAR(s.sse + s.ssr, tss, 1e-10 * tss);
  EXPECT_NEAR(s.r2, s.ssr / tss, 1e-12);
  EXPECT_NEAR(s.ssr, s.beta_hat.dot(s.gram * s.beta_hat), 1e-10 * s.ssr);
}

TEST(FitSuffstats, InvariantUnderColumnTransformations) {
  auto rng = derive_stream(17, 0);
  const Dataset d = fixtures::random_dataset(rng, 25, 3, 1.0);
  const SuffStats base = fit_suffstats(d, {0, 1, 2});
  std::normal_distribution<double> normal;
  for (int t = 0; t < 20; ++t) {
    Eigen::MatrixXd a(3, 3);
    for (int i = 0; i < 9; ++i) a(i / 3, i % 3) = normal(rng);
    Dataset moved = d;
    moved.x = d.x * a;
    const SuffStats s = fit_suffstats(moved, {0, 1, 2});
    EXPECT_NEAR(s.sse, base.sse, 1e-9 * base.sse);
    EXPECT_NEAR(s.ssr, base.ssr, 1e-9 * base.ssr);
    EXPECT_NEAR(s.r2, base.r2, 1e-9);
  }
}

TEST(FitSuffstats, NestedMonotone) {
  auto rng = derive_stream(19, 0);
  for (int rep = 0; rep < 20; ++rep) {
    const Dataset d = fixtures::random_dataset(rng, 20, 6);
    double prev = -1.0;
    for (int k = 0; k <= 6; ++k) {
      const SuffStats s = fit_suffstats(d, fixtures::first_columns(k));
      EXPECT_GE(s.ssr, prev - 1e-12);
      prev = s.ssr;
    }
  }
}

TEST(FitNestedSuffstats, AgreesWithDirectFits) {
  auto rng = derive_stream(23, 0);
  const Dataset d = fixtures::random_dataset(rng, 30, 6);
  const auto nested = fit_nested_suffstats(d, 6);
  ASSERT_EQ(nested.size(), 6u);
  for (int k = 1; k <= 6; ++k) {
    const SuffStats direct = fit_suffstats(d, fixtures::first_columns(k));
    const SuffStats &s = nested[static_cast<std::size_t>(k - 1)];
    EXPECT_EQ(s.p_i, k);
    EXPECT_NEAR(s.sse, direct.sse, 1e-10 * direct.sse);
    EXPECT_NEAR(s.ssr, direct.ssr, 1e-10 * std::max(1.0, direct.ssr));
    EXPECT_LE((s.beta_hat - direct.beta_hat).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(CorrelatedDesign, IdentityTarget) {
  auto rng = derive_stream(29, 0);
  const Eigen::MatrixXd x = make_correlated_design(12, 2, CorrelationSpec::identity(), rng);
  EXPECT_LE((x.transpose() * x / 12.0 - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(CorrelatedDesign, ExactPairCorrelation) {
  for (double r : {0.9, -0.9}) {
    auto rng = derive_stream(31, 0);
    const Eigen::MatrixXd x = make_correlated_design(10, 2, CorrelationSpec::pair(r), rng);
    EXPECT_NEAR((x.transpose() * x / 10.0)(0, 1), r, 1e-8);
    EXPECT_NEAR(x.col(0).mean(), 0.0, 1e-12);
  }
}

TEST(CorrelatedDesign, ExactAr1) {
  auto rng = derive_stream(37, 0);
  const Eigen::MatrixXd x = make_correlated_design(50, 8, CorrelationSpec::ar1(0.9), rng);
  EXPECT_LE((x.transpose() * x / 50.0 - ar1_target(8, 0.9)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(CorrelatedDesign, Reproducible) {
  auto a = derive_stream(41, 3);
  auto b = derive_stream(41, 3);
  const Eigen::MatrixXd xa = make_correlated_design(20, 4, CorrelationSpec::ar1(0.5), a);
  const Eigen::MatrixXd xb = make_correlated_design(20, 4, CorrelationSpec::ar1(0.5), b);
  EXPECT_TRUE((xa.array() == xb.array()).all());
}

TEST(CorrelatedDesign, RejectsShortSample) {
  auto rng = derive_stream(43, 0);
  EXPECT_THROW(make_correlated_design(3, 3, CorrelationSpec::identity(), rng), InputError);
}

TEST(CorrelatedDesign, RejectsIndefiniteTarget) {
  Eigen::MatrixXd m(2, 2);
  m << 1.0, 1.5, 1.5, 1.0;
  auto rng = derive_stream(47, 0);
  EXPECT_THROW(make_correlated_design(10, 2, CorrelationSpec::explicit_matrix(m), rng), InputError);
}
