#pragma once

#include <Eigen/Core>

#include <cmath>
#include <vector>

#include "ml2bf/bayesfactors.hpp"
#include "ml2bf/errors.hpp"
#include "ml2bf/modelspace.hpp"
#include "ml2bf/regression.hpp"

namespace ml2bf {

/// Coefficient estimate on the full predictor set (zeros outside `model`).
struct Estimate {
  Eigen::VectorXd beta;
  Model model;
};

/// Posterior-mean shrinkage factor under the restricted type II ML prior:
/// n/(n+1) up to the R^2 threshold, 1 - (1 - R^2)/((n - p0 - 1) R^2) above it.
inline double ml_shrinkage(const SuffStats &s) {
  detail::require_identifiable(s);
  const double n = s.n;
  if (s.p_i == 0) return n / (n + 1.0);
  const double u = s.one_minus_r2();
  if (u <= 0.0) return 1.0;
  if (s.r2 <= ml_threshold(s.n, s.p0)) return n / (n + 1.0);
  return 1.0 - u / ((s.n - s.p0 - 1.0) * s.r2);
}

inline Eigen::VectorXd posterior_mean_ml(const SuffStats &s) { return ml_shrinkage(s) * s.beta_hat; }

inline Eigen::VectorXd posterior_mean_gprior(const SuffStats &s, double g) {
  if (!(g > 0.0)) throw InputError("g must be positive");
  return (g / (1.0 + g)) * s.beta_hat;
}

/// Per-model shrinkage of beta_hat for the rules whose posterior mean is a
/// multiple of it. BIC, BIC-prior and AIC use beta_hat itself.
inline double shrinkage(const SuffStats &s, const PriorMethod &method) {
  switch (method.tag) {
    case PriorMethod::Tag::ml2: return ml_shrinkage(s);
    case PriorMethod::Tag::lb: {
      const double g = method.g > 0.0 ? method.g : s.n;
      return g / (1.0 + g);
    }
    case PriorMethod::Tag::zs:
    case PriorMethod::Tag::zs_laplace: return s.p_i == 0 ? 1.0 : zellner_siow(s, method.quadrature, true).shrinkage;
    case PriorMethod::Tag::ghat: {
      const double g = log_bf_ghat(s).g_hat;
      return std::isinf(g) ? 1.0 : g / (1.0 + g);
    }
    case PriorMethod::Tag::bic:
    case PriorMethod::Tag::bic_prior:
    case PriorMethod::Tag::aic: return 1.0;
  }
  return 1.0;
}

/// Zero-pads model coefficients out to p predictors.
inline Estimate pad(const Model &model, const Eigen::VectorXd &coef, int p) {
  if (static_cast<Eigen::Index>(model.size()) != coef.size()) throw InputError("coefficient/model size mismatch");
  Estimate e{Eigen::VectorXd::Zero(p), model};
  for (std::size_t j = 0; j < model.size(); ++j) e.beta(model[j]) = coef(static_cast<Eigen::Index>(j));
  return e;
}

/// Posterior-weighted average of per-model estimates.
inline Eigen::VectorXd bma_estimate(const ModelPosterior &post, const std::vector<Estimate> &per_model) {
  if (per_model.size() != post.size()) throw InputError("one estimate per model is required");
  if (post.has_infinite_evidence()) {
    throw NumericalError("model averaging is undefined with a perfect-fit (infinite evidence) model");
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(post.predictor_count());
  for (std::size_t m = 0; m < post.size(); ++m) {
    if (per_model[m].beta.size() != out.size()) throw InputError("estimate has the wrong length");
    out += post.posterior_prob[m] * per_model[m].beta;
  }
  return out;
}

/// ||X beta - X delta||^2.
inline double predictive_loss(const Eigen::MatrixXd &x, const Eigen::VectorXd &beta_true,
                              const Eigen::VectorXd &delta) {
  if (x.cols() != beta_true.size() || x.cols() != delta.size()) {
    throw InputError("predictive_loss: dimension mismatch");
  }
  return (x * (beta_true - delta)).squaredNorm();
}

}  // namespace ml2bf
