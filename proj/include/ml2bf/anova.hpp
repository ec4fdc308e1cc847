#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "ml2bf/errors.hpp"
#include "ml2bf/random.hpp"

namespace ml2bf::anova {

/// One-way layout with p groups of r replicates and unit error variance.
struct AnovaStats {
  int p = 1;
  int r = 1;
  /// Sum of squared group means.
  double mu_hat_norm2 = 0.0;

  void check() const {
    if (p < 1 || r < 1) throw InputError("anova needs p >= 1 and r >= 1");
    if (!(mu_hat_norm2 >= 0.0)) throw InputError("anova: ||mu_hat||^2 must be non-negative");
  }
};

/// Group means of a p x r matrix of observations.
inline AnovaStats stats_from_observations(const Eigen::MatrixXd &y) {
  AnovaStats s{static_cast<int>(y.rows()), static_cast<int>(y.cols()), y.rowwise().mean().squaredNorm()};
  s.check();
  return s;
}

/// Weight on mu_hat mu_hat' in the maximizer of m(Y) over W >= I_p.
inline double what_weight(const AnovaStats &s) {
  s.check();
  if (s.mu_hat_norm2 == 0.0) return 0.0;
  return std::max(0.0, 1.0 - (s.r + 1.0) / (s.r * s.mu_hat_norm2));
}

/// Full-vs-null log Bayes factor under the restricted type II ML prior (W >= I_p).
inline double log_bf_ml(const AnovaStats &s) {
  s.check();
  const double r = s.r;
  const double base = -0.5 * s.p * std::log1p(r);
  if (s.mu_hat_norm2 <= 1.0 + 1.0 / r) {
    return base + r * r * s.mu_hat_norm2 / (2.0 * (r + 1.0));
  }
  return base - 0.5 * std::log(r * s.mu_hat_norm2 / (r + 1.0)) + 0.5 * (r * s.mu_hat_norm2 - 1.0);
}

/// Known-variance normal prior N(0, I_p) on mu.
inline double log_bf_fixed_normal(const AnovaStats &s) {
  s.check();
  const double r = s.r;
  return -0.5 * s.p * std::log1p(r) + r * r * s.mu_hat_norm2 / (2.0 * (r + 1.0));
}

/// BIC with a log r penalty per group mean: l(mu_hat) - l(0) = r ||mu_hat||^2 / 2.
inline double log_bf_bic(const AnovaStats &s) {
  s.check();
  return 0.5 * s.r * s.mu_hat_norm2 - 0.5 * s.p * std::log(static_cast<double>(s.r));
}

enum class Method { fixed_normal, bic_r, ml2 };

inline std::string method_name(Method m) {
  switch (m) {
    case Method::fixed_normal: return "fixed_normal";
    case Method::bic_r: return "bic_r";
    case Method::ml2: return "ml2";
  }
  return "?";
}

inline double log_bf(const AnovaStats &s, Method m) {
  switch (m) {
    case Method::fixed_normal: return log_bf_fixed_normal(s);
    case Method::bic_r: return log_bf_bic(s);
    case Method::ml2: return log_bf_ml(s);
  }
  return 0.0;
}

/// tau^2 at or below which the method is inconsistent under the full model.
/// The bic_r and ml2 values are clamped at zero.
inline double consistency_threshold(Method m, int r) {
  if (r < 1) throw InputError("replicate count must be at least 1");
  const double rr = r;
  switch (m) {
    case Method::fixed_normal: return (1.0 + rr) * std::log1p(rr) / (rr * rr) - 1.0 / rr;
    case Method::bic_r: return std::max(0.0, (std::log(rr) - 1.0) / rr);
    case Method::ml2: return std::max(0.0, (std::log1p(rr) - 1.0) / rr);
  }
  return 0.0;
}

/// Whether the method is consistent when the null model is true.
inline bool consistent_under_null(Method m, int r) { return m != Method::bic_r || r >= 3; }

/// Truth under the full model: mu_i = +tau, -tau, +tau, ... so ||mu||^2 / p = tau^2 exactly.
struct AnovaTruth {
  double tau2 = 0.0;

  Eigen::VectorXd mu(int p) const {
    const double tau = std::sqrt(tau2);
    Eigen::VectorXd m(p);
    for (int i = 0; i < p; ++i) m(i) = (i % 2 == 0) ? tau : -tau;
    return m;
  }
};

struct TrajectoryRow {
  int p = 0;
  Method method = Method::ml2;
  double avg_prob_true = 0.0;
  double se = 0.0;
  int replicates = 0;
};

/// Posterior probability of the full model at equal prior odds.
inline double prob_full(double log_bf) {
  return log_bf >= 0.0 ? 1.0 / (1.0 + std::exp(-log_bf)) : std::exp(log_bf) / (1.0 + std::exp(log_bf));
}

/// Average posterior probability of the true model along a grid of group
/// counts. `truth` empty means the null model is true. Replicate i at grid
/// point g draws from derive_stream(derive_seed(seed, g), i).
inline std::vector<TrajectoryRow> simulate_consistency(const std::optional<AnovaTruth> &truth, int r,
                                                       const std::vector<int> &p_grid, int replicates,
                                                       std::uint64_t seed, const std::vector<Method> &methods) {
  if (r < 1 || replicates < 1) throw InputError("simulate_consistency needs r >= 1 and replicates >= 1");
  std::vector<TrajectoryRow> rows;
  for (std::size_t g = 0; g < p_grid.size(); ++g) {
    const int p = p_grid[g];
    if (p < 1) throw InputError("group count must be positive");
    const Eigen::VectorXd mu = truth ? truth->mu(p) : Eigen::VectorXd::Zero(p);
    std::vector<double> sum(methods.size(), 0.0);
    std::vector<double> sum_sq(methods.size(), 0.0);
    const std::uint64_t cell_seed = derive_seed(seed, g);
    for (int rep = 0; rep < replicates; ++rep) {
      auto rng = derive_stream(cell_seed, static_cast<std::uint64_t>(rep));
      std::normal_distribution<double> normal;
      double norm2 = 0.0;
      for (int i = 0; i < p; ++i) {
        double total = 0.0;
        for (int j = 0; j < r; ++j) total += mu(i) + normal(rng);
        const double mean = total / r;
        norm2 += mean * mean;
      }
      const AnovaStats s{p, r, norm2};
      for (std::size_t k = 0; k < methods.size(); ++k) {
        const double full = prob_full(log_bf(s, methods[k]));
        const double v = truth ? full : 1.0 - full;
        sum[k] += v;
        sum_sq[k] += v * v;
      }
    }
    for (std::size_t k = 0; k < methods.size(); ++k) {
      TrajectoryRow row;
      row.p = p;
      row.method = methods[k];
      row.replicates = replicates;
      row.avg_prob_true = sum[k] / replicates;
      const double var = replicates > 1 ? (sum_sq[k] - replicates * row.avg_prob_true * row.avg_prob_true) /
                                              (replicates - 1.0)
                                        : 0.0;
      row.se = std::sqrt(std::max(0.0, var) / replicates);
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace ml2bf::anova
