#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include "ml2bf/errors.hpp"

namespace ml2bf {

struct QuadratureConfig {
  /// Maximum number of Gauss-Kronrod panels the adaptive rule may use.
  int node_count = 512;
  double relative_tolerance = 1e-8;

  void check() const {
    if (node_count < 32) throw InputError("quadrature node_count must be at least 32");
    if (!(relative_tolerance > 0.0)) throw InputError("quadrature tolerance must be positive");
  }
};

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
  int panels = 0;
};

namespace detail {

// 15-point Kronrod nodes (non-negative half) and weights, with the embedded
// 7-point Gauss weights on the odd-indexed nodes.
inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kGaussWeights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a;
  double b;
  double value;
  double error;
  bool operator<(const Panel &o) const { return error < o.error; }
};

template <typename F>
Panel gauss_kronrod_15(F &&f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(center);
  double kronrod = fc * kKronrodWeights[7];
  double gauss = fc * kGaussWeights[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kKronrodNodes[j];
    const double sum = f(center - dx) + f(center + dx);
    kronrod += kKronrodWeights[j] * sum;
    if (j % 2 == 1) gauss += kGaussWeights[j / 2] * sum;
  }
  return {a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (7/15) quadrature of f over the panels
/// delimited by `breakpoints` (sorted, at least two). Splits the panel with the
/// largest error estimate until the summed estimate is below
/// tolerance * |integral|, or throws once the panel budget is spent.
template <typename F>
QuadratureResult integrate_adaptive(F &&f, const std::vector<double> &breakpoints, const QuadratureConfig &cfg,
                                    double absolute_floor = 0.0) {
  cfg.check();
  if (breakpoints.size() < 2) throw InputError("quadrature needs at least one panel");
  std::priority_queue<detail::Panel> panels;
  double value = 0.0;
  double error = 0.0;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    const detail::Panel panel = detail::gauss_kronrod_15(f, breakpoints[i], breakpoints[i + 1]);
    value += panel.value;
    error += panel.error;
    panels.push(panel);
  }
  auto count = static_cast<int>(panels.size());
  while (error > std::max(cfg.relative_tolerance * std::abs(value), absolute_floor)) {
    if (count >= cfg.node_count) {
      throw NumericalError("quadrature did not converge: residual estimate " + std::to_string(error) +
                           " on integral " + std::to_string(value));
    }
    const detail::Panel worst = panels.top();
    panels.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    const detail::Panel left = detail::gauss_kronrod_15(f, worst.a, mid);
    const detail::Panel right = detail::gauss_kronrod_15(f, mid, worst.b);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    panels.push(left);
    panels.push(right);
    ++count;
  }
  // Re-sum to shed rounding accumulated by the running updates.
  double total = 0.0;
  double total_error = 0.0;
  while (!panels.empty()) {
    total += panels.top().value;
    total_error += panels.top().error;
    panels.pop();
  }
  return {total, total_error, count};
}

template <typename F>
QuadratureResult integrate_adaptive(F &&f, double a, double b, const QuadratureConfig &cfg,
                                    double absolute_floor = 0.0) {
  return integrate_adaptive(std::forward<F>(f), std::vector<double>{a, b}, cfg, absolute_floor);
}

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton iteration on P_m).
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendre(int m) : nodes(static_cast<std::size_t>(m)), weights(static_cast<std::size_t>(m)) {
    for (int i = 0; i < (m + 1) / 2; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (m + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0;
        double p1 = x;
        for (int k = 2; k <= m; ++k) {
          const double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = pk;
        }
        dp = m * (x * p1 - p0) / (x * x - 1.0);
        const double step = p1 / dp;
        x -= step;
        if (std::abs(step) < 1e-16) break;
      }
      const double w = 2.0 / ((1.0 - x * x) * dp * dp);
      nodes[static_cast<std::size_t>(i)] = -x;
      nodes[static_cast<std::size_t>(m - 1 - i)] = x;
      weights[static_cast<std::size_t>(i)] = w;
      weights[static_cast<std::size_t>(m - 1 - i)] = w;
    }
  }
};

}  // namespace ml2bf
