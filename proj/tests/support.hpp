#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <random>

#include "ml2bf/regression.hpp"
#include "ml2bf/random.hpp"

namespace ml2bf::fixtures {

/// Intercept plus p Gaussian predictors with a few nonzero coefficients.
template <typename Rng>
Dataset random_dataset(Rng &rng, int n, int p, double signal = 0.5) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x = standard_normal_matrix(rng, n, p);
  Eigen::VectorXd beta(p);
  for (int j = 0; j < p; ++j) beta(j) = (j % 2 == 0 ? signal : 0.0) * normal(rng);
  Eigen::VectorXd y = x * beta;
  for (int i = 0; i < n; ++i) y(i) += 1.5 + normal(rng);
  return orthogonalize(with_intercept(std::move(y), std::move(x)));
}

/// Orthonormal basis for the complement of span(x0).
inline Eigen::MatrixXd complement_basis(const Eigen::MatrixXd &x0) {
  const auto n = x0.rows();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(x0);
  const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
  return q.rightCols(n - x0.cols());
}

inline Model first_columns(int k) {
  Model m;
  for (int j = 0; j < k; ++j) m.push_back(j);
  return m;
}

}  // namespace ml2bf::fixtures
