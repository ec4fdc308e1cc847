#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "ml2bf/errors.hpp"
#include "ml2bf/random.hpp"

namespace ml2bf {

/// Indices (0-based, increasing) of the candidate predictors in a model.
using Model = std::vector<int>;

/// Response, common predictors and candidate predictors of a normal linear model
/// y = x0 b0 + x b + e.
struct Dataset {
  Eigen::VectorXd y;
  Eigen::MatrixXd x0;
  Eigen::MatrixXd x;

  Eigen::Index n() const { return y.size(); }
  Eigen::Index p0() const { return x0.cols(); }
  Eigen::Index p() const { return x.cols(); }
};

/// Sufficient statistics of one model, relative to the common-predictor fit.
struct SuffStats {
  int n = 0;
  int p0 = 0;
  int p_i = 0;
  Eigen::VectorXd beta_hat;
  /// X_i'X_i of the (orthogonalized) selected columns.
  Eigen::MatrixXd gram;
  double sse = 0.0;
  double ssr = 0.0;
  double r2 = 0.0;
  /// log |x0'x0|, used only by absolute (not null-relative) marginals.
  double log_det_x0 = 0.0;

  double tss() const { return sse + ssr; }

  /// 1 - R^2 computed from sse so it stays accurate when R^2 is close to one.
  double one_minus_r2() const {
    const double total = sse + ssr;
    return total > 0.0 ? sse / total : 1.0;
  }

  /// Statistics that only carry (n, p0, p_i, R^2), for the closed-form Bayes
  /// factors that depend on nothing else. Total sum of squares is `tss`.
  static SuffStats from_r2(int n, int p0, int p_i, double r2, double tss = 1.0) {
    SuffStats s;
    s.n = n;
    s.p0 = p0;
    s.p_i = p_i;
    s.r2 = r2;
    s.ssr = r2 * tss;
    s.sse = (1.0 - r2) * tss;
    return s;
  }
};

namespace detail {

constexpr double kRankTolerance = 1e-10;

// Householder QR without pivoting; |R_jj| is the norm of column j after
// projecting out the columns before it.
inline bool full_column_rank(const Eigen::HouseholderQR<Eigen::MatrixXd> &qr,
                             const Eigen::MatrixXd &a) {
  const Eigen::MatrixXd &r = qr.matrixQR();
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    const double norm = a.col(j).norm();
    if (norm == 0.0 || std::abs(r(j, j)) < kRankTolerance * norm) {
      return false;
    }
  }
  return true;
}

inline Eigen::MatrixXd thin_q(const Eigen::HouseholderQR<Eigen::MatrixXd> &qr, Eigen::Index rows,
                              Eigen::Index cols) {
  return qr.householderQ() * Eigen::MatrixXd::Identity(rows, cols);
}

// y minus its projection on span(x0), and log|x0'x0|.
inline Eigen::VectorXd residual_on_common(const Dataset &data, double *log_det_x0 = nullptr) {
  if (data.p0() == 0) {
    if (log_det_x0 != nullptr) *log_det_x0 = 0.0;
    return data.y;
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(data.x0);
  if (!full_column_rank(qr, data.x0)) {
    throw NumericalError("degenerate common predictors");
  }
  const Eigen::MatrixXd q = thin_q(qr, data.n(), data.p0());
  if (log_det_x0 != nullptr) {
    *log_det_x0 = 2.0 * qr.matrixQR().diagonal().head(data.p0()).cwiseAbs().array().log().sum();
  }
  return data.y - q * (q.transpose() * data.y);
}

}  // namespace detail

inline void validate(const Dataset &data) {
  if (data.n() < 1) throw InputError("dataset has no observations");
  if (data.x0.rows() != data.n() || data.x.rows() != data.n()) {
    throw InputError("dataset: y, x0 and x must have the same number of rows");
  }
  if (!data.y.allFinite() || !data.x0.allFinite() || !data.x.allFinite()) {
    throw InputError("dataset contains non-finite values");
  }
}

/// Dataset with an intercept as the only common predictor.
inline Dataset with_intercept(Eigen::VectorXd y, Eigen::MatrixXd x) {
  Dataset d;
  d.x0 = Eigen::MatrixXd::Ones(y.size(), 1);
  d.y = std::move(y);
  d.x = std::move(x);
  return d;
}

/// Projects the common predictors out of every candidate column,
/// x <- (I - P_x0) x. y is returned unchanged.
inline Dataset orthogonalize(const Dataset &data) {
  validate(data);
  Dataset out = data;
  if (data.p0() == 0) return out;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(data.x0);
  if (!detail::full_column_rank(qr, data.x0)) {
    throw NumericalError("degenerate common predictors");
  }
  const Eigen::MatrixXd q = detail::thin_q(qr, data.n(), data.p0());
  out.x -= q * (q.transpose() * data.x);
  return out;
}

/// Least-squares fit of the candidate columns in `subset` on an orthogonalized dataset.
inline SuffStats fit_suffstats(const Dataset &data, const Model &subset) {
  validate(data);
  const auto n = static_cast<int>(data.n());
  const auto p0 = static_cast<int>(data.p0());
  const auto p_i = static_cast<int>(subset.size());
  for (std::size_t j = 0; j < subset.size(); ++j) {
    if (subset[j] < 0 || subset[j] >= data.p()) throw InputError("subset index out of range");
    if (j > 0 && subset[j] <= subset[j - 1]) throw InputError("subset must be strictly increasing");
  }
  if (n <= p0 + p_i) throw InputError("insufficient sample size");

  SuffStats s;
  s.n = n;
  s.p0 = p0;
  s.p_i = p_i;
  const Eigen::VectorXd yr = detail::residual_on_common(data, &s.log_det_x0);
  const double tss = yr.squaredNorm();
  if (p_i == 0) {
    s.sse = tss;
    return s;
  }

  Eigen::MatrixXd xi(n, p_i);
  for (int j = 0; j < p_i; ++j) xi.col(j) = data.x.col(subset[j]);
  if (p0 > 0) {
    const double cross = (data.x0.transpose() * xi).cwiseAbs().maxCoeff();
    const double scale = data.x0.colwise().norm().maxCoeff() * xi.colwise().norm().maxCoeff();
    if (cross > 1e-8 * scale) throw InputError("dataset not orthogonalized against common predictors");
  }

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(xi);
  if (!detail::full_column_rank(qr, xi)) {
    throw NumericalError("selected columns are rank deficient");
  }
  const Eigen::VectorXd qty = qr.householderQ().adjoint() * yr;
  const auto r = qr.matrixQR().topLeftCorner(p_i, p_i).triangularView<Eigen::Upper>();
  s.beta_hat = r.solve(qty.head(p_i));
  s.gram = xi.transpose() * xi;
  s.ssr = qty.head(p_i).squaredNorm();
  s.sse = (yr - xi * s.beta_hat).squaredNorm();
  const double total = s.ssr + s.sse;
  s.r2 = total > 0.0 ? s.ssr / total : 0.0;
  return s;
}

/// Statistics of the nested models {0}, {0,1}, ..., {0,...,k-1} (sizes 1..k)
/// from a single QR of the first k columns. The largest model may saturate
/// (n = p0 + k); that is only usable with known sigma^2.
inline std::vector<SuffStats> fit_nested_suffstats(const Dataset &data, int k) {
  validate(data);
  const auto n = static_cast<int>(data.n());
  const auto p0 = static_cast<int>(data.p0());
  if (k < 1 || k > data.p()) throw InputError("nested size out of range");
  if (n < p0 + k) throw InputError("insufficient sample size");

  double log_det_x0 = 0.0;
  const Eigen::VectorXd yr = detail::residual_on_common(data, &log_det_x0);
  const Eigen::MatrixXd xk = data.x.leftCols(k);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(xk);
  if (!detail::full_column_rank(qr, xk)) {
    throw NumericalError("selected columns are rank deficient");
  }
  const Eigen::VectorXd qty = qr.householderQ().adjoint() * yr;
  const Eigen::MatrixXd gram = xk.transpose() * xk;
  // sse of the size-j model is the squared norm of the trailing n - j entries of Q'y.
  std::vector<double> tail(static_cast<std::size_t>(n) + 1, 0.0);
  for (int i = n - 1; i >= 0; --i) tail[i] = tail[i + 1] + qty(i) * qty(i);

  std::vector<SuffStats> out;
  out.reserve(static_cast<std::size_t>(k));
  double ssr = 0.0;
  for (int j = 1; j <= k; ++j) {
    SuffStats s;
    s.n = n;
    s.p0 = p0;
    s.p_i = j;
    s.log_det_x0 = log_det_x0;
    const auto r = qr.matrixQR().topLeftCorner(j, j).triangularView<Eigen::Upper>();
    s.beta_hat = r.solve(qty.head(j));
    s.gram = gram.topLeftCorner(j, j);
    ssr += qty(j - 1) * qty(j - 1);
    s.ssr = ssr;
    s.sse = tail[j];
    s.r2 = s.ssr + s.sse > 0.0 ? s.ssr / (s.ssr + s.sse) : 0.0;
    out.push_back(std::move(s));
  }
  return out;
}

/// Target correlation of a simulated design.
struct CorrelationSpec {
  enum class Kind { identity, ar1, explicit_matrix };

  Kind kind = Kind::identity;
  double rho = 0.0;
  Eigen::MatrixXd matrix;

  static CorrelationSpec identity() { return {}; }
  static CorrelationSpec ar1(double rho) { return {Kind::ar1, rho, {}}; }
  static CorrelationSpec explicit_matrix(Eigen::MatrixXd m) {
    return {Kind::explicit_matrix, 0.0, std::move(m)};
  }
  /// Two predictors with correlation r.
  static CorrelationSpec pair(double r) {
    Eigen::Matrix2d m;
    m << 1.0, r, r, 1.0;
    return explicit_matrix(m);
  }

  Eigen::MatrixXd target(Eigen::Index p) const {
    switch (kind) {
      case Kind::identity:
        return Eigen::MatrixXd::Identity(p, p);
      case Kind::ar1: {
        if (!(rho > -1.0 && rho < 1.0)) throw InputError("ar1 correlation must lie in (-1, 1)");
        Eigen::MatrixXd m(p, p);
        for (Eigen::Index i = 0; i < p; ++i)
          for (Eigen::Index j = 0; j < p; ++j)
            m(i, j) = std::pow(rho, static_cast<double>(std::abs(i - j)));
        return m;
      }
      case Kind::explicit_matrix:
        if (matrix.rows() != p || matrix.cols() != p) {
          throw InputError("correlation matrix has the wrong dimension");
        }
        return matrix;
    }
    return {};
  }
};

/// n x p matrix of independent standard normal draws, filled column by column.
template <typename Rng>
Eigen::MatrixXd standard_normal_matrix(Rng &rng, Eigen::Index n, Eigen::Index p) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd z(n, p);
  for (Eigen::Index j = 0; j < p; ++j)
    for (Eigen::Index i = 0; i < n; ++i) z(i, j) = normal(rng);
  return z;
}

/// Turns raw draws into a centered design whose 1/n-normalized sample
/// correlation equals the target exactly: principal-component scores of the
/// centered draws, rescaled to unit 1/n variance, times the transposed
/// Cholesky factor of the target.
inline Eigen::MatrixXd correlated_design_from(const Eigen::MatrixXd &raw, const CorrelationSpec &spec) {
  const Eigen::Index n = raw.rows();
  const Eigen::Index p = raw.cols();
  if (n <= p) throw InputError("correlated design needs n > p");
  const Eigen::MatrixXd target = spec.target(p);
  if ((target - target.transpose()).cwiseAbs().maxCoeff() > 1e-12 ||
      (target.diagonal().array() - 1.0).abs().maxCoeff() > 1e-12) {
    throw InputError("target correlation must be symmetric with unit diagonal");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(target);
  if (llt.info() != Eigen::Success) throw InputError("target correlation is not positive definite");

  const Eigen::MatrixXd centered = raw.rowwise() - raw.colwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinU);
  const auto &sv = svd.singularValues();
  if (sv(p - 1) <= detail::kRankTolerance * sv(0)) {
    throw NumericalError("raw design draws are rank deficient");
  }
  // Columns of U are orthonormal and centered; sqrt(n) U has unit 1/n variance.
  const Eigen::MatrixXd scores = std::sqrt(static_cast<double>(n)) * svd.matrixU();
  const Eigen::MatrixXd lower = llt.matrixL();
  return scores * lower.transpose();
}

template <typename Rng>
Eigen::MatrixXd make_correlated_design(Eigen::Index n, Eigen::Index p, const CorrelationSpec &spec,
                                       Rng &rng) {
  if (n <= p) throw InputError("correlated design needs n > p");
  return correlated_design_from(standard_normal_matrix(rng, n, p), spec);
}

}  // namespace ml2bf
