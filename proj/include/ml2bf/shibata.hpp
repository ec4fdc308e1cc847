#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "ml2bf/bayesfactors.hpp"
#include "ml2bf/errors.hpp"
#include "ml2bf/modelspace.hpp"
#include "ml2bf/parallel.hpp"
#include "ml2bf/quadrature.hpp"
#include "ml2bf/random.hpp"
#include "ml2bf/regression.hpp"

namespace ml2bf::shibata {

enum class LossKind { coefficients, integral };

struct ShibataConfig {
  int n = 30;
  int k = 29;
  double sigma2 = 1.0;
  int replicates = 1000;
  std::uint64_t seed = 0;
  /// Re-fit the power-law (c, a) for every nested model; otherwise fit once on
  /// the largest model and truncate its diagonal.
  bool refit_per_model = true;
  /// Log-evidence penalty per coefficient for AIC: 1 is the usual -2l + 2j
  /// criterion, 0.5 the -2l + j form.
  double aic_penalty = 1.0;
  /// Which loss fills avg_loss; both are always computed.
  LossKind loss = LossKind::coefficients;
  int threads = 1;

  void check() const {
    if (!(n > k && k >= 1)) throw ConfigError("shibata needs n > k >= 1");
    if (!(sigma2 > 0.0)) throw ConfigError("shibata needs sigma2 > 0");
    if (replicates < 1) throw ConfigError("replicates must be at least 1");
    if (!(aic_penalty >= 0.0)) throw ConfigError("aic_penalty must be non-negative");
  }

  std::string scenario() const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "n=%d k=%d sigma2=%g", n, k, sigma2);
    return buf;
  }

  static ShibataConfig preset(int index) {
    switch (index) {
      case 1: return {30, 29, 1.0};
      case 2: return {100, 79, 1.0};
      case 3: return {2000, 79, 3.0};
      default: throw ConfigError("shibata preset must be 1, 2 or 3");
    }
  }
};

struct ChebyshevDesign {
  Eigen::VectorXd knots;
  Eigen::MatrixXd x0;
  Eigen::MatrixXd x;
};

/// Columns T_1..T_k at the knots x_i = cos(pi (n - i + 1/2) / n), i = 1..n,
/// built by the three-term recurrence. Throws if the discrete orthogonality
/// X'X = (n/2) I, 1'X = 0 fails.
inline ChebyshevDesign chebyshev_design(int n, int k) {
  if (!(n > k && k >= 1)) throw InputError("chebyshev design needs n > k >= 1");
  ChebyshevDesign d;
  d.knots.resize(n);
  for (int i = 1; i <= n; ++i) d.knots(i - 1) = std::cos(std::numbers::pi * (n - i + 0.5) / n);
  d.x0 = Eigen::MatrixXd::Ones(n, 1);
  d.x.resize(n, k);
  Eigen::VectorXd prev = Eigen::VectorXd::Ones(n);
  Eigen::VectorXd cur = d.knots;
  for (int j = 1; j <= k; ++j) {
    d.x.col(j - 1) = cur;
    Eigen::VectorXd next = 2.0 * d.knots.cwiseProduct(cur) - prev;
    prev = std::move(cur);
    cur = std::move(next);
  }
  const Eigen::MatrixXd gram = d.x.transpose() * d.x;
  const double off = (gram - 0.5 * n * Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff();
  const double mean = (d.x0.transpose() * d.x).cwiseAbs().maxCoeff();
  if (off > 1e-8 * n || mean > 1e-8 * n) throw NumericalError("chebyshev design failed its orthogonality check");
  return d;
}

/// f(x) = -log(1 - x).
inline Eigen::VectorXd true_signal(const Eigen::VectorXd &x) {
  if ((x.array() >= 1.0).any()) throw InputError("true signal is unbounded at x = 1");
  return -(1.0 - x.array()).log().matrix();
}

/// Diagonal power-law prior covariance d_i = c i^{-a}.
struct PowerLawPrior {
  double c = 0.0;
  double a = 0.0;
  /// Set when the optimum sits on the search box edge (other than a = 0).
  bool boundary_hit = false;

  Eigen::VectorXd diagonal(int j) const {
    Eigen::VectorXd d(j);
    for (int i = 1; i <= j; ++i) d(i - 1) = c * std::pow(static_cast<double>(i), -a);
    return d;
  }
};

namespace detail {

inline bool is_diagonal(const Eigen::MatrixXd &g) {
  const double scale = g.diagonal().cwiseAbs().maxCoeff();
  const Eigen::MatrixXd off = g - Eigen::MatrixXd(g.diagonal().asDiagonal());
  return off.cwiseAbs().maxCoeff() <= 1e-10 * scale;
}

// Known-sigma^2 log Bayes factor for a diagonal prior when the gram matrix is
// diagonal: a sum of independent one-dimensional terms.
inline double diagonal_log_bf(const Eigen::VectorXd &gram_diag, const Eigen::VectorXd &beta_hat,
                              const Eigen::VectorXd &d, double sigma2) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    const double gd = gram_diag(i) * d(i);
    total += -0.5 * std::log1p(gd) + 0.5 * gram_diag(i) * beta_hat(i) * beta_hat(i) * gd / ((1.0 + gd) * sigma2);
  }
  return total;
}

// Bounded Nelder-Mead maximization in two dimensions.
template <typename F>
std::array<double, 2> nelder_mead_2d(F &&f, std::array<double, 2> start, double step,
                                     const std::array<double, 2> &lo, const std::array<double, 2> &hi) {
  auto clamp = [&](std::array<double, 2> v) {
    for (int i = 0; i < 2; ++i) v[i] = std::clamp(v[i], lo[i], hi[i]);
    return v;
  };
  struct Vertex {
    std::array<double, 2> x;
    double v;
  };
  auto make = [&](std::array<double, 2> x) {
    x = clamp(x);
    return Vertex{x, f(x[0], x[1])};
  };
  std::array<Vertex, 3> s = {make(start), make({start[0] + step, start[1]}), make({start[0], start[1] + step})};
  for (int iter = 0; iter < 400; ++iter) {
    std::sort(s.begin(), s.end(), [](const Vertex &a, const Vertex &b) { return a.v > b.v; });
    const double spread = std::max(std::abs(s[0].x[0] - s[2].x[0]) + std::abs(s[0].x[1] - s[2].x[1]),
                                   std::abs(s[0].x[0] - s[1].x[0]) + std::abs(s[0].x[1] - s[1].x[1]));
    if (spread < 1e-9 && std::abs(s[0].v - s[2].v) < 1e-12) break;
    const std::array<double, 2> centroid = {0.5 * (s[0].x[0] + s[1].x[0]), 0.5 * (s[0].x[1] + s[1].x[1])};
    auto along = [&](double t) {
      return make({centroid[0] + t * (s[2].x[0] - centroid[0]), centroid[1] + t * (s[2].x[1] - centroid[1])});
    };
    const Vertex reflected = along(-1.0);
    if (reflected.v > s[0].v) {
      const Vertex expanded = along(-2.0);
      s[2] = expanded.v > reflected.v ? expanded : reflected;
    } else if (reflected.v > s[1].v) {
      s[2] = reflected;
    } else {
      const Vertex contracted = reflected.v > s[2].v ? along(-0.5) : along(0.5);
      if (contracted.v > std::max(reflected.v, s[2].v)) {
        s[2] = contracted;
      } else {
        for (int i = 1; i < 3; ++i) {
          s[i] = make({0.5 * (s[0].x[0] + s[i].x[0]), 0.5 * (s[0].x[1] + s[i].x[1])});
        }
      }
    }
  }
  std::sort(s.begin(), s.end(), [](const Vertex &a, const Vertex &b) { return a.v > b.v; });
  return s[0].x;
}

}  // namespace detail

/// Known-sigma^2 log Bayes factor of a model under the power-law prior.
inline double power_law_log_bf(const SuffStats &s, const PowerLawPrior &prior, double sigma2) {
  if (s.p_i == 0) return 0.0;
  const Eigen::VectorXd d = prior.diagonal(s.p_i);
  if (detail::is_diagonal(s.gram)) return detail::diagonal_log_bf(s.gram.diagonal(), s.beta_hat, d, sigma2);
  return log_bf_known_sigma(s, Eigen::MatrixXd(d.asDiagonal()), sigma2);
}

/// Posterior mean of beta under N(0, sigma^2 W): W (W + G^{-1})^{-1} beta_hat.
inline Eigen::VectorXd power_law_posterior_mean(const SuffStats &s, const PowerLawPrior &prior) {
  if (s.p_i == 0) return {};
  const Eigen::VectorXd d = prior.diagonal(s.p_i);
  if (detail::is_diagonal(s.gram)) {
    const Eigen::ArrayXd gd = s.gram.diagonal().array() * d.array();
    return (s.beta_hat.array() * gd / (1.0 + gd)).matrix();
  }
  const auto p = s.p_i;
  const Eigen::MatrixXd w = d.asDiagonal();
  const Eigen::MatrixXd m = w + s.gram.llt().solve(Eigen::MatrixXd::Identity(p, p));
  return w * m.llt().solve(s.beta_hat);
}

/// Search box for (log10 c, a) and the coarse grid laid over it.
struct PowerLawSearch {
  double log10_c_lo = -4.0;
  double log10_c_hi = 4.0;
  double a_lo = 0.0;
  double a_hi = 6.0;
  double grid_step = 0.25;
};

/// Type II ML (c, a): coarse grid over the box, then Nelder-Mead from the best
/// grid point. Deterministic.
inline PowerLawPrior fit_power_law_prior(const SuffStats &s, double sigma2, const PowerLawSearch &box = {}) {
  if (!(sigma2 > 0.0)) throw InputError("sigma2 must be positive");
  if (s.p_i == 0) return {};
  const bool diagonal = detail::is_diagonal(s.gram);
  const Eigen::VectorXd gram_diag = s.gram.diagonal();
  Eigen::VectorXd log_index(s.p_i);
  for (int i = 0; i < s.p_i; ++i) log_index(i) = std::log(i + 1.0);

  auto objective = [&](double log10_c, double a) {
    const PowerLawPrior prior{std::pow(10.0, log10_c), a};
    if (!diagonal) return power_law_log_bf(s, prior, sigma2);
    const Eigen::VectorXd d = (prior.c * (-a * log_index.array()).exp()).matrix();
    return detail::diagonal_log_bf(gram_diag, s.beta_hat, d, sigma2);
  };

  double best = -std::numeric_limits<double>::infinity();
  std::array<double, 2> start = {box.log10_c_lo, box.a_lo};
  const int nc = static_cast<int>(std::lround((box.log10_c_hi - box.log10_c_lo) / box.grid_step));
  const int na = static_cast<int>(std::lround((box.a_hi - box.a_lo) / box.grid_step));
  for (int ic = 0; ic <= nc; ++ic) {
    const double lc = box.log10_c_lo + ic * box.grid_step;
    for (int ia = 0; ia <= na; ++ia) {
      const double a = box.a_lo + ia * box.grid_step;
      const double v = objective(lc, a);
      if (v > best) {
        best = v;
        start = {lc, a};
      }
    }
  }
  const auto x = detail::nelder_mead_2d(objective, start, 0.5 * box.grid_step, {box.log10_c_lo, box.a_lo},
                                        {box.log10_c_hi, box.a_hi});
  PowerLawPrior out{std::pow(10.0, x[0]), x[1]};
  if (objective(x[0], x[1]) < best) out = {std::pow(10.0, start[0]), start[1]};
  const double lc = std::log10(out.c);
  constexpr double edge = 1e-6;
  out.boundary_hit = lc <= box.log10_c_lo + edge || lc >= box.log10_c_hi - edge || out.a >= box.a_hi - edge;
  return out;
}

/// Fits the full model of an orthogonalized design and then the power-law prior.
inline PowerLawPrior fit_power_law_prior(const Eigen::VectorXd &y, const ChebyshevDesign &design, double sigma2) {
  Dataset data{y, design.x0, design.x};
  Model all(static_cast<std::size_t>(design.x.cols()));
  for (int j = 0; j < design.x.cols(); ++j) all[static_cast<std::size_t>(j)] = j;
  return fit_power_law_prior(fit_suffstats(data, all), sigma2);
}

enum class Method { power_law, ml2_unit_info, aic, bic };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::power_law: return "power_law";
    case Method::ml2_unit_info: return "ml2_unit_info";
    case Method::aic: return "aic";
    case Method::bic: return "bic";
  }
  return "?";
}

inline constexpr std::array<Method, 4> kMethods = {Method::power_law, Method::ml2_unit_info, Method::aic,
                                                   Method::bic};

/// Posterior over the nested models plus each model's coefficient estimate.
struct NestedFit {
  ModelPosterior posterior;
  std::vector<Eigen::VectorXd> coefficients;
  std::vector<PowerLawPrior> priors;
};

/// Evidence and estimates for the nested models of sizes 1..k (statistics in
/// size order), uniform prior over sizes, known sigma^2.
inline NestedFit shibata_evidence(const std::vector<SuffStats> &nested, Method method, double sigma2,
                                  bool refit_per_model = true, double aic_penalty = 1.0) {
  if (nested.empty()) throw InputError("no nested models");
  if (!(sigma2 > 0.0)) throw InputError("sigma2 must be positive");
  const int k = static_cast<int>(nested.size());
  NestedFit fit;
  fit.coefficients.resize(nested.size());
  std::vector<double> evidence(nested.size());

  PowerLawPrior shared;
  if (method == Method::power_law && !refit_per_model) shared = fit_power_law_prior(nested.back(), sigma2);

  for (std::size_t j = 0; j < nested.size(); ++j) {
    const SuffStats &s = nested[j];
    const double n = s.n;
    switch (method) {
      case Method::aic:
        evidence[j] = 0.5 * s.ssr / sigma2 - aic_penalty * s.p_i;
        fit.coefficients[j] = s.beta_hat;
        break;
      case Method::bic:
        evidence[j] = 0.5 * s.ssr / sigma2 - 0.5 * s.p_i * std::log(n);
        fit.coefficients[j] = s.beta_hat;
        break;
      case Method::ml2_unit_info: {
        const KnownSigmaFit ml = fit_known_sigma_ml(s, sigma2, n);
        evidence[j] = ml.log_bf;
        fit.coefficients[j] = ml.shrinkage * s.beta_hat;
        break;
      }
      case Method::power_law: {
        const PowerLawPrior prior = refit_per_model ? fit_power_law_prior(s, sigma2) : shared;
        evidence[j] = power_law_log_bf(s, prior, sigma2);
        fit.coefficients[j] = power_law_posterior_mean(s, prior);
        fit.priors.push_back(prior);
        break;
      }
    }
  }
  const auto space = ModelSpace::nested(k);
  auto models = models_of(space);
  auto prior = log_model_prior(space, models);
  fit.posterior = make_posterior(space, std::move(models), std::move(evidence), std::move(prior));
  return fit;
}

/// Integrated squared error against f(x) = -log(1 - x) on [-1, 1] for
/// fhat = alpha + sum_j beta_j T_j. Composite Gauss-Legendre: uniform panels on
/// [-1, 1/2], then panels [1 - 2^-i, 1 - 2^-(i+1)] graded toward the log
/// singularity at x = 1.
class LossQuadrature {
 public:
  explicit LossQuadrature(int max_degree, int quadrature_points = 2000) {
    if (max_degree < 0) throw InputError("max_degree must be non-negative");
    constexpr int kUniformPanels = 10;
    // Past 2^-48 the panels collapse in double precision; the dropped tail is ~1e-12.
    constexpr int kGradedPanels = 48;
    const int total_panels = kUniformPanels + kGradedPanels;
    const int per_panel = std::max(8, quadrature_points / total_panels);
    const int uniform_points = std::max(per_panel, quadrature_points / 3 / kUniformPanels);
    const GaussLegendre uniform_rule(uniform_points);
    const GaussLegendre graded_rule(per_panel);
    auto add_panel = [&](const GaussLegendre &rule, double a, double b) {
      for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        nodes_.push_back(0.5 * (a + b) + 0.5 * (b - a) * rule.nodes[i]);
        weights_.push_back(0.5 * (b - a) * rule.weights[i]);
      }
    };
    const double split = 0.5;
    for (int p = 0; p < kUniformPanels; ++p) {
      add_panel(uniform_rule, -1.0 + (split + 1.0) * p / kUniformPanels,
                -1.0 + (split + 1.0) * (p + 1) / kUniformPanels);
    }
    for (int i = 1; i <= kGradedPanels; ++i) add_panel(graded_rule, 1.0 - std::ldexp(1.0, -i), 1.0 - std::ldexp(1.0, -i - 1));

    const auto m = static_cast<Eigen::Index>(nodes_.size());
    truth_.resize(m);
    basis_.resize(m, max_degree + 1);
    for (Eigen::Index q = 0; q < m; ++q) {
      const double x = nodes_[static_cast<std::size_t>(q)];
      truth_(q) = -std::log1p(-x);
      double prev = 1.0;
      double cur = x;
      basis_(q, 0) = 1.0;
      for (int j = 1; j <= max_degree; ++j) {
        basis_(q, j) = cur;
        const double next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
      }
    }
    weight_vec_ = Eigen::Map<const Eigen::VectorXd>(weights_.data(), m);
  }

  int max_degree() const { return static_cast<int>(basis_.cols()) - 1; }
  std::size_t point_count() const { return nodes_.size(); }

  /// Loss for intercept alpha and coefficients on T_1..T_len(beta).
  double loss(double alpha, const Eigen::VectorXd &beta) const {
    if (beta.size() > max_degree()) throw InputError("coefficient vector exceeds the quadrature basis");
    Eigen::VectorXd fhat = Eigen::VectorXd::Constant(truth_.size(), alpha);
    if (beta.size() > 0) fhat.noalias() += basis_.middleCols(1, beta.size()) * beta;
    return weight_vec_.dot((truth_ - fhat).array().square().matrix());
  }

  /// Integral of an arbitrary function with the same rule.
  template <typename F>
  double integrate(F &&f) const {
    double total = 0.0;
    for (std::size_t q = 0; q < nodes_.size(); ++q) total += weights_[q] * f(nodes_[q]);
    return total;
  }

 private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
  Eigen::VectorXd weight_vec_;
  Eigen::VectorXd truth_;
  Eigen::MatrixXd basis_;
};

inline double predictive_loss_integral(double alpha, const Eigen::VectorXd &beta, int quadrature_points = 2000) {
  return LossQuadrature(static_cast<int>(beta.size()), quadrature_points).loss(alpha, beta);
}

/// Squared error of the first k series coefficients, sum_{j<=k} (2/j - beta_j)^2,
/// with beta zero-padded to length k. This is the loss behind the published
/// Shibata table; the integrated loss is reported next to it.
inline double coefficient_loss(const Eigen::VectorXd &beta, int k) {
  if (beta.size() > k) throw InputError("coefficient vector longer than k");
  double total = 0.0;
  for (int j = 1; j <= k; ++j) {
    const double b = j <= beta.size() ? beta(j - 1) : 0.0;
    total += (2.0 / j - b) * (2.0 / j - b);
  }
  return total;
}

inline std::string loss_name(LossKind l) { return l == LossKind::coefficients ? "coefficients" : "integral"; }

inline LossKind parse_loss(const std::string &v) {
  if (v == "coefficients") return LossKind::coefficients;
  if (v == "integral") return LossKind::integral;
  throw ConfigError("shibata loss must be 'coefficients' or 'integral'");
}

enum class Selector { hpm, mpm, bma };

inline std::string selector_name(Selector s) {
  switch (s) {
    case Selector::hpm: return "HPM";
    case Selector::mpm: return "MPM";
    case Selector::bma: return "BMA";
  }
  return "?";
}

struct ShibataRow {
  std::string scenario;
  Method method = Method::power_law;
  Selector selector = Selector::hpm;
  double avg_loss = 0.0;
  double se_loss = 0.0;
  double avg_coef_loss = 0.0;
  double se_coef_loss = 0.0;
  double avg_integral_loss = 0.0;
  double se_integral_loss = 0.0;
  double avg_size = 0.0;
  double se_size = 0.0;
  int replicates = 0;
  std::uint64_t seed = 0;
};

struct ReplicateOutcome {
  // [method][selector]
  std::array<std::array<double, 3>, 4> coef_loss{};
  std::array<std::array<double, 3>, 4> integral_loss{};
  std::array<std::array<double, 3>, 4> size{};
};

/// One simulated data set of the scenario, evaluated under every method and selector.
inline ReplicateOutcome shibata_replicate(const ShibataConfig &cfg, const ChebyshevDesign &design,
                                          const LossQuadrature &quad, const Eigen::VectorXd &f_knots,
                                          std::uint64_t replicate) {
  auto rng = derive_stream(cfg.seed, replicate);
  std::normal_distribution<double> normal;
  const double sd = std::sqrt(cfg.sigma2);
  Eigen::VectorXd y(cfg.n);
  for (int i = 0; i < cfg.n; ++i) y(i) = f_knots(i) + sd * normal(rng);

  const Dataset data{y, design.x0, design.x};
  const auto nested = fit_nested_suffstats(data, cfg.k);
  // Flat prior on the intercept and 1'X = 0: its posterior mean is the sample mean.
  const double alpha = y.mean();

  ReplicateOutcome out;
  for (std::size_t mi = 0; mi < kMethods.size(); ++mi) {
    const NestedFit fit = shibata_evidence(nested, kMethods[mi], cfg.sigma2, cfg.refit_per_model, cfg.aic_penalty);
    const auto &post = fit.posterior;
    const std::size_t h = hpm(post).size() - 1;
    const std::size_t m = mpm(post).size() - 1;
    Eigen::VectorXd bma = Eigen::VectorXd::Zero(cfg.k);
    double mean_size = 0.0;
    for (std::size_t j = 0; j < post.size(); ++j) {
      bma.head(fit.coefficients[j].size()) += post.posterior_prob[j] * fit.coefficients[j];
      mean_size += post.posterior_prob[j] * static_cast<double>(post.models[j].size());
    }
    out.coef_loss[mi] = {coefficient_loss(fit.coefficients[h], cfg.k), coefficient_loss(fit.coefficients[m], cfg.k),
                         coefficient_loss(bma, cfg.k)};
    out.integral_loss[mi] = {quad.loss(alpha, fit.coefficients[h]), quad.loss(alpha, fit.coefficients[m]),
                             quad.loss(alpha, bma)};
    out.size[mi] = {static_cast<double>(h + 1), static_cast<double>(m + 1), mean_size};
  }
  return out;
}

/// Average loss and model size per method and selector over the replicates.
/// BMA's size column is the posterior mean model size.
inline std::vector<ShibataRow> run_shibata(const ShibataConfig &cfg) {
  cfg.check();
  const ChebyshevDesign design = chebyshev_design(cfg.n, cfg.k);
  const LossQuadrature quad(cfg.k);
  const Eigen::VectorXd f_knots = true_signal(design.knots);
  const auto outcomes = run_replicates(cfg.replicates, cfg.threads, [&](int rep) {
    return shibata_replicate(cfg, design, quad, f_knots, static_cast<std::uint64_t>(rep));
  });

  std::vector<ShibataRow> rows;
  for (std::size_t si = 0; si < 3; ++si) {
    for (std::size_t mi = 0; mi < kMethods.size(); ++mi) {
      MeanSe coef;
      MeanSe integral;
      MeanSe size;
      for (const auto &o : outcomes) {
        coef.add(o.coef_loss[mi][si]);
        integral.add(o.integral_loss[mi][si]);
        size.add(o.size[mi][si]);
      }
      ShibataRow row;
      row.scenario = cfg.scenario();
      row.method = kMethods[mi];
      row.selector = static_cast<Selector>(si);
      row.avg_coef_loss = coef.mean();
      row.se_coef_loss = coef.se();
      row.avg_integral_loss = integral.mean();
      row.se_integral_loss = integral.se();
      const MeanSe &chosen = cfg.loss == LossKind::coefficients ? coef : integral;
      row.avg_loss = chosen.mean();
      row.se_loss = chosen.se();
      row.avg_size = size.mean();
      row.se_size = size.se();
      row.replicates = cfg.replicates;
      row.seed = cfg.seed;
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace ml2bf::shibata
