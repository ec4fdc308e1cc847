#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ml2bf/errors.hpp"
#include "ml2bf/quadrature.hpp"
#include "ml2bf/regression.hpp"

namespace ml2bf {

inline constexpr double kInfiniteEvidence = std::numeric_limits<double>::infinity();

/// 1 - R^2 at or below this is treated as a perfect fit.
inline constexpr double kSaturatedFit = 1e-14;

/// R^2 above which the constrained covariance leaves its lower bound.
inline double ml_threshold(int n, int p0) { return (n + 1.0) / (2.0 * n - p0); }

namespace detail {

inline void require_identifiable(const SuffStats &s) {
  if (s.p_i < 0 || s.p0 < 0) throw InputError("negative model dimension");
  if (s.n <= s.p0 + s.p_i) throw InputError("insufficient sample size");
}

inline bool saturated(const SuffStats &s) { return s.p_i > 0 && s.one_minus_r2() <= kSaturatedFit; }

}  // namespace detail

/// Restricted type II ML prior covariance a*b*b' + n*(X'X)^{-1} of one model.
struct WHat {
  double a = 0.0;
  int n = 0;
  Eigen::VectorXd beta_hat;
  Eigen::LLT<Eigen::MatrixXd> gram_factor;

  /// Dense W. Needs the model's beta_hat and gram.
  Eigen::MatrixXd matrix() const {
    const auto p = beta_hat.size();
    Eigen::MatrixXd w = n * gram_factor.solve(Eigen::MatrixXd::Identity(p, p));
    w.noalias() += a * beta_hat * beta_hat.transpose();
    return w;
  }
};

/// Maximizer of the marginal likelihood over W >= n (X'X)^{-1}.
inline WHat what_covariance(const SuffStats &s) {
  detail::require_identifiable(s);
  if (s.p_i > 0 && s.sse <= 0.0) throw NumericalError("saturated fit: marginal unbounded");
  WHat w;
  w.n = s.n;
  w.beta_hat = s.beta_hat;
  if (s.gram.size() > 0) w.gram_factor.compute(s.gram);
  // ssr == 0 makes the second term -inf, so the max picks 0.
  if (s.p_i > 0 && s.ssr > 0.0) {
    w.a = std::max(0.0, (s.n - s.p0 - 1.0) / s.sse - (s.n + 1.0) / s.ssr);
  }
  return w;
}

/// Null-based log Bayes factor under the restricted type II ML prior.
inline double log_bf_ml(const SuffStats &s) {
  detail::require_identifiable(s);
  if (s.p_i == 0) return 0.0;
  if (detail::saturated(s)) return kInfiniteEvidence;
  const double n = s.n;
  const double m = s.n - s.p0;
  const double p = s.p_i;
  const double u = s.one_minus_r2();
  if (s.r2 <= ml_threshold(s.n, s.p0)) {
    return 0.5 * (m - p) * std::log(n + 1.0) - 0.5 * m * std::log(n * u + 1.0);
  }
  const double log_phi = (p - 1.0) * std::log(n + 1.0) + m * std::log(m) - (m - 1.0) * std::log(m - 1.0);
  return -0.5 * log_phi - 0.5 * std::log(s.r2) - 0.5 * (m - 1.0) * std::log(u);
}

/// Zellner g-prior with fixed g. g = n is the lower-bound (LB) prior.
inline double log_bf_gprior(const SuffStats &s, double g) {
  detail::require_identifiable(s);
  if (!(g > 0.0)) throw InputError("g must be positive");
  if (s.p_i == 0) return 0.0;
  const double m = s.n - s.p0;
  return 0.5 * (m - s.p_i) * std::log1p(g) - 0.5 * m * std::log1p(g * s.one_minus_r2());
}

inline double log_bf_bic(const SuffStats &s) {
  if (s.p_i == 0) return 0.0;
  if (detail::saturated(s)) return kInfiniteEvidence;
  return -0.5 * s.p_i * std::log(static_cast<double>(s.n)) - 0.5 * s.n * std::log(s.one_minus_r2());
}

/// Bayes factor of the g = n prior centered at beta_hat.
inline double log_bf_bicprior(const SuffStats &s) {
  if (s.p_i == 0) return 0.0;
  if (detail::saturated(s)) return kInfiniteEvidence;
  return -0.5 * s.p_i * std::log(s.n + 1.0) - 0.5 * (s.n - s.p0) * std::log(s.one_minus_r2());
}

/// exp(-AIC/2) read as an approximate marginal. `penalty` is the log-evidence
/// cost per coefficient: 1 for the usual -2l + 2p criterion, 0.5 for -2l + p.
inline double log_bf_aic(const SuffStats &s, double penalty = 1.0) {
  if (s.p_i == 0) return 0.0;
  if (detail::saturated(s)) return kInfiniteEvidence;
  return -penalty * s.p_i - 0.5 * s.n * std::log(s.one_minus_r2());
}

struct ZellnerSiowResult {
  double log_bf = 0.0;
  /// Posterior mean of g/(1+g); the posterior mean of beta is this times beta_hat.
  double shrinkage = 0.0;
  int panels = 0;
};

namespace detail {

// log of BF(g) * InvGamma(g; 1/2, n/2) * g at g = exp(t).
struct ZellnerSiowIntegrand {
  double half_m_minus_p;
  double half_m;
  double log_u;
  double half_n;
  double constant;

  double operator()(double t) const {
    return half_m_minus_p * log1pexp(t) - half_m * log1pexp(t + log_u) + constant - 0.5 * t -
           half_n * std::exp(-t);
  }
  double slope(double t) const {
    return half_m_minus_p * logistic(t) - half_m * logistic(t + log_u) - 0.5 + half_n * std::exp(-t);
  }
  double curvature(double t) const {
    const double a = logistic(t);
    const double b = logistic(t + log_u);
    return half_m_minus_p * a * (1.0 - a) - half_m * b * (1.0 - b) - half_n * std::exp(-t);
  }

  static double log1pexp(double x) { return x > 35.0 ? x + std::exp(-x) : std::log1p(std::exp(x)); }
  static double logistic(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
};

}  // namespace detail

/// Zellner-Siow Cauchy prior, computed through its inverse-gamma(1/2, n/2)
/// scale mixture of g-priors on a log g axis.
inline ZellnerSiowResult zellner_siow(const SuffStats &s, const QuadratureConfig &cfg,
                                      bool with_shrinkage = false) {
  detail::require_identifiable(s);
  cfg.check();
  if (s.p_i == 0) return {};
  if (detail::saturated(s)) return {kInfiniteEvidence, 1.0, 0};

  const double n = s.n;
  const double m = s.n - s.p0;
  const double u = s.one_minus_r2();
  const detail::ZellnerSiowIntegrand ell{0.5 * (m - s.p_i), 0.5 * m, std::log(u), 0.5 * n,
                                         0.5 * std::log(0.5 * n) - 0.5 * std::log(std::numbers::pi)};

  // Coarse scan for the mode, then Newton polish.
  const double scan_lo = std::log(0.5 * n) - 10.0;
  const double scan_hi = std::max(std::log(0.5 * n), -ell.log_u) + 12.0;
  constexpr double step = 0.25;
  double mode = scan_lo;
  double peak = ell(scan_lo);
  for (double t = scan_lo + step; t <= scan_hi; t += step) {
    const double v = ell(t);
    if (v > peak) {
      peak = v;
      mode = t;
    }
  }
  for (int iter = 0; iter < 50; ++iter) {
    const double curv = ell.curvature(mode);
    if (!(curv < 0.0)) break;
    const double next = std::clamp(mode - ell.slope(mode) / curv, mode - step, mode + step);
    if (std::abs(next - mode) < 1e-12) break;
    if (ell(next) < peak) break;
    mode = next;
    peak = ell(next);
  }
  const double curv = ell.curvature(mode);
  const double width = std::clamp(curv < 0.0 ? 1.0 / std::sqrt(-curv) : 1.0, 1e-3, 5.0);

  // Walk outwards with growing steps until the integrand is negligible.
  constexpr double drop = 50.0;
  auto edge = [&](double direction) {
    double t = mode;
    double h = width;
    for (int k = 0; k < 200; ++k) {
      t += direction * h;
      if (ell(t) < peak - drop) break;
      h *= 1.5;
    }
    return t;
  };
  const double lo = edge(-1.0);
  const double hi = edge(1.0);

  std::vector<double> cuts = {lo, mode - 4.0 * width, mode - width, mode, mode + width, mode + 4.0 * width, hi};
  cuts.erase(std::remove_if(cuts.begin(), cuts.end(), [&](double c) { return c < lo || c > hi; }), cuts.end());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  auto density = [&](double t) { return std::exp(ell(t) - peak); };
  ZellnerSiowResult out;
  const QuadratureResult mass = integrate_adaptive(density, cuts, cfg);
  out.log_bf = peak + std::log(mass.value);
  out.panels = mass.panels;
  if (with_shrinkage) {
    auto weighted = [&](double t) {
      return detail::ZellnerSiowIntegrand::logistic(t) * std::exp(ell(t) - peak);
    };
    out.shrinkage = integrate_adaptive(weighted, cuts, cfg).value / mass.value;
  }
  return out;
}

inline double log_bf_zs(const SuffStats &s, const QuadratureConfig &cfg = {}) {
  return zellner_siow(s, cfg).log_bf;
}

/// Laplace approximation to the Zellner-Siow Bayes factor taken on the g
/// axis (not log g), as several packages do. Poor for small n; kept as a
/// comparator, the quadrature version is the reference.
inline double log_bf_zs_laplace(const SuffStats &s) {
  detail::require_identifiable(s);
  if (s.p_i == 0) return 0.0;
  if (detail::saturated(s)) return kInfiniteEvidence;
  const double n = s.n;
  const double m = s.n - s.p0;
  const detail::ZellnerSiowIntegrand ell{0.5 * (m - s.p_i), 0.5 * m, std::log(s.one_minus_r2()), 0.5 * n,
                                         0.5 * std::log(0.5 * n) - 0.5 * std::log(std::numbers::pi)};
  // On the g axis the log integrand is ell(t) - t with t = log g.
  auto f = [&](double t) { return ell(t) - t; };
  const double lo = std::log(0.5 * n) - 15.0;
  const double hi = std::max(std::log(0.5 * n), -ell.log_u) + 15.0;
  double mode = lo;
  double peak = f(lo);
  for (double t = lo + 0.25; t <= hi; t += 0.25) {
    if (f(t) > peak) {
      peak = f(t);
      mode = t;
    }
  }
  for (int iter = 0; iter < 60; ++iter) {
    const double curv = ell.curvature(mode);
    if (!(curv < 0.0)) break;
    const double next = std::clamp(mode - (ell.slope(mode) - 1.0) / curv, mode - 0.25, mode + 0.25);
    if (std::abs(next - mode) < 1e-13) break;
    mode = next;
  }
  const double curv = ell.curvature(mode);
  if (!(curv < 0.0)) throw NumericalError("zs laplace: integrand has no interior mode");
  // d2/dg2 at the mode is curv / g^2.
  return f(mode) + 0.5 * std::log(2.0 * std::numbers::pi) + mode - 0.5 * std::log(-curv);
}

struct GHatResult {
  double log_bf = 0.0;
  double g_hat = 0.0;
};

/// g-prior with g chosen by unrestricted (g >= 0) type II ML. The fixed-g log
/// Bayes factor has a derivative in g whose sign is that of a decreasing
/// linear function, so the maximizer is its root clamped at zero:
/// g = max(0, ((n - p0) R^2 - p_i) / (p_i (1 - R^2))).
inline GHatResult log_bf_ghat(const SuffStats &s) {
  detail::require_identifiable(s);
  if (s.p_i == 0) return {};
  if (detail::saturated(s)) return {kInfiniteEvidence, kInfiniteEvidence};
  const double m = s.n - s.p0;
  const double u = s.one_minus_r2();
  const double g = std::max(0.0, (m * (1.0 - u) - s.p_i) / (s.p_i * u));
  if (g == 0.0) return {0.0, 0.0};
  return {std::max(0.0, log_bf_gprior(s, g)), g};
}

namespace detail {

struct FixedWTerms {
  double log_det_i_plus_gw = 0.0;
  double quad = 0.0;  // beta_hat' (W + G^{-1})^{-1} beta_hat
};

inline FixedWTerms fixed_w_terms(const SuffStats &s, const Eigen::MatrixXd &w) {
  const auto p = s.p_i;
  if (w.rows() != p || w.cols() != p) throw InputError("prior covariance has the wrong dimension");
  if (s.gram.rows() != p || s.beta_hat.size() != p) {
    throw InputError("statistics lack the gram matrix needed for a fixed-W marginal");
  }
  Eigen::LLT<Eigen::MatrixXd> gram_llt(s.gram);
  if (gram_llt.info() != Eigen::Success) throw NumericalError("gram matrix is not positive definite");
  const Eigen::MatrixXd m = w + gram_llt.solve(Eigen::MatrixXd::Identity(p, p));
  Eigen::LLT<Eigen::MatrixXd> m_llt(m);
  const Eigen::VectorXd d = m_llt.matrixLLT().diagonal();
  if (m_llt.info() != Eigen::Success || d.minCoeff() <= 1e-150) {
    throw NumericalError("W + (X'X)^{-1} is singular");
  }
  FixedWTerms t;
  t.log_det_i_plus_gw = 2.0 * gram_llt.matrixLLT().diagonal().array().log().sum() +
                        2.0 * d.array().log().sum();
  t.quad = s.beta_hat.dot(m_llt.solve(s.beta_hat));
  return t;
}

}  // namespace detail

/// Log marginal likelihood of the model under beta | sigma^2 ~ N(0, sigma^2 W)
/// and the right-Haar prior on (b0, sigma^2).
inline double log_marginal_fixed_w(const SuffStats &s, const Eigen::MatrixXd &w) {
  detail::require_identifiable(s);
  const double m = s.n - s.p0;
  const double base = std::lgamma(0.5 * m) - 0.5 * m * std::log(std::numbers::pi) - 0.5 * s.log_det_x0;
  if (s.p_i == 0) return base - 0.5 * m * std::log(s.tss());
  const auto t = detail::fixed_w_terms(s, w);
  return base - 0.5 * t.log_det_i_plus_gw - 0.5 * m * std::log(s.sse + t.quad);
}

/// log m_W(Y) - log m_0(Y).
inline double log_bf_fixed_w(const SuffStats &s, const Eigen::MatrixXd &w) {
  detail::require_identifiable(s);
  if (s.p_i == 0) return 0.0;
  const auto t = detail::fixed_w_terms(s, w);
  const double m = s.n - s.p0;
  return -0.5 * t.log_det_i_plus_gw - 0.5 * m * std::log((s.sse + t.quad) / s.tss());
}

/// Log marginal with sigma^2 known: beta ~ N(0, sigma^2 W), flat prior on b0.
inline double log_marginal_known_sigma(const SuffStats &s, const Eigen::MatrixXd &w, double sigma2) {
  if (!(sigma2 > 0.0)) throw InputError("sigma2 must be positive");
  const double m = s.n - s.p0;
  const double base = -0.5 * m * std::log(2.0 * std::numbers::pi * sigma2) - 0.5 * s.log_det_x0;
  if (s.p_i == 0) return base - 0.5 * s.tss() / sigma2;
  const auto t = detail::fixed_w_terms(s, w);
  return base - 0.5 * t.log_det_i_plus_gw - 0.5 * (s.sse + t.quad) / sigma2;
}

inline double log_bf_known_sigma(const SuffStats &s, const Eigen::MatrixXd &w, double sigma2) {
  if (!(sigma2 > 0.0)) throw InputError("sigma2 must be positive");
  if (s.p_i == 0) return 0.0;
  const auto t = detail::fixed_w_terms(s, w);
  return -0.5 * t.log_det_i_plus_gw + 0.5 * (s.ssr - t.quad) / sigma2;
}

struct KnownSigmaFit {
  double a = 0.0;
  double log_bf = 0.0;
  /// Posterior mean of beta is shrinkage * beta_hat.
  double shrinkage = 0.0;
};

/// Known-sigma^2 type II ML over W = a b b' + scale (X'X)^{-1}, a >= 0, by
/// bounded Brent search on log(1 + a q), q = SSR/(1 + scale). Along this
/// family |I + GW| = (1 + scale)^p (1 + a q) and b'(W + G^{-1})^{-1} b = q/(1 + a q).
inline KnownSigmaFit fit_known_sigma_ml(const SuffStats &s, double sigma2, double scale) {
  if (!(sigma2 > 0.0)) throw InputError("sigma2 must be positive");
  if (!(scale > 0.0)) throw InputError("lower-bound scale must be positive");
  if (s.p_i == 0) return {0.0, 0.0, 0.0};
  const double p = s.p_i;
  const double q = s.ssr / (1.0 + scale);
  auto objective = [&](double tau) {
    // tau = log(1 + a q)
    return -0.5 * p * std::log1p(scale) - 0.5 * tau + 0.5 * (s.ssr - q * std::exp(-tau)) / sigma2;
  };
  KnownSigmaFit fit;
  fit.log_bf = objective(0.0);
  double tau_best = 0.0;
  if (q > 0.0) {
    const double tau_max = std::max(1.0, std::log1p(q / sigma2) + 10.0);
    const auto [tau, neg] = boost::math::tools::brent_find_minima(
        [&](double t) { return -objective(t); }, 0.0, tau_max, std::numeric_limits<double>::digits / 2);
    if (-neg > fit.log_bf) {
      fit.log_bf = -neg;
      tau_best = tau;
    }
    fit.a = std::expm1(tau_best) / q;
  }
  fit.shrinkage = 1.0 - std::exp(-tau_best) / (1.0 + scale);
  return fit;
}

/// Tagged evidence rule.
struct PriorMethod {
  enum class Tag { ml2, lb, bic, bic_prior, zs, zs_laplace, ghat, aic };

  Tag tag = Tag::ml2;
  /// g for the LB rule; 0 means g = n.
  double g = 0.0;
  QuadratureConfig quadrature{};

  static PriorMethod ml2() { return {Tag::ml2}; }
  static PriorMethod lb(double g = 0.0) {
    if (g < 0.0) throw InputError("g must be positive");
    return {Tag::lb, g};
  }
  static PriorMethod bic() { return {Tag::bic}; }
  static PriorMethod bic_prior() { return {Tag::bic_prior}; }
  static PriorMethod zs(QuadratureConfig cfg = {}) { return {Tag::zs, 0.0, cfg}; }
  static PriorMethod zs_laplace() { return {Tag::zs_laplace}; }
  static PriorMethod ghat() { return {Tag::ghat}; }
  static PriorMethod aic() { return {Tag::aic}; }

  std::string name() const {
    switch (tag) {
      case Tag::ml2: return "ml";
      case Tag::lb: return "lb";
      case Tag::bic: return "bic";
      case Tag::bic_prior: return "bicprior";
      case Tag::zs: return "zs";
      case Tag::zs_laplace: return "zslaplace";
      case Tag::ghat: return "ghat";
      case Tag::aic: return "aic";
    }
    return "?";
  }

  static PriorMethod parse(std::string_view token) {
    if (token == "ml" || token == "ml2") return ml2();
    if (token == "lb") return lb();
    if (token == "bic") return bic();
    if (token == "bicprior") return bic_prior();
    if (token == "zs") return zs();
    if (token == "zslaplace") return zs_laplace();
    if (token == "ghat") return ghat();
    if (token == "aic") return aic();
    throw ConfigError("unknown method '" + std::string(token) + "'");
  }
};

inline double log_bf(const SuffStats &s, const PriorMethod &method) {
  switch (method.tag) {
    case PriorMethod::Tag::ml2: return log_bf_ml(s);
    case PriorMethod::Tag::lb: return log_bf_gprior(s, method.g > 0.0 ? method.g : s.n);
    case PriorMethod::Tag::bic: return log_bf_bic(s);
    case PriorMethod::Tag::bic_prior: return log_bf_bicprior(s);
    case PriorMethod::Tag::zs: return log_bf_zs(s, method.quadrature);
    case PriorMethod::Tag::zs_laplace: return log_bf_zs_laplace(s);
    case PriorMethod::Tag::ghat: return log_bf_ghat(s).log_bf;
    case PriorMethod::Tag::aic: return log_bf_aic(s);
  }
  return 0.0;
}

}  // namespace ml2bf
