#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "ml2bf/bayesfactors.hpp"
#include "ml2bf/errors.hpp"
#include "ml2bf/estimation.hpp"
#include "ml2bf/modelspace.hpp"
#include "ml2bf/parallel.hpp"
#include "ml2bf/random.hpp"
#include "ml2bf/regression.hpp"

namespace ml2bf::harness {

// ---------------------------------------------------------------------------
// Two correlated predictors plus an intercept (Table 1).

struct Table1Config {
  std::vector<int> sample_sizes = {5, 10, 15, 20};
  std::vector<double> correlations = {-0.9, 0.9};
  std::vector<PriorMethod> methods = {PriorMethod::bic(), PriorMethod::ml2(), PriorMethod::lb(), PriorMethod::zs()};
  Eigen::Vector2d beta{5.0, 5.0};
  double alpha = 0.0;
  int replicates = 1000;
  std::uint64_t seed = 0;
  /// Reuse one error draw (its first n entries) across sample sizes instead of
  /// drawing independently per sample size.
  bool share_noise_across_n = false;
  /// Model prior per method (aligned with `methods`); empty means uniform over
  /// the four models for every method.
  std::vector<ModelSpace::Prior> model_priors;
  int threads = 1;

  ModelSpace::Prior prior_for(std::size_t method_index) const {
    if (model_priors.empty()) return ModelSpace::Prior::uniform_over_models;
    if (model_priors.size() != methods.size()) throw ConfigError("one model prior per method is required");
    return model_priors[method_index];
  }
};

/// Settings under which the published table is reproduced: BIC and ML with
/// equal model probabilities; LB and the Laplace-approximated Zellner-Siow rule
/// with a uniform prior on model size.
inline Table1Config table1_published_profile() {
  Table1Config cfg;
  cfg.methods = {PriorMethod::bic(), PriorMethod::ml2(), PriorMethod::lb(), PriorMethod::zs_laplace()};
  cfg.model_priors = {ModelSpace::Prior::uniform_over_models, ModelSpace::Prior::uniform_over_models,
                      ModelSpace::Prior::uniform_over_size, ModelSpace::Prior::uniform_over_size};
  return cfg;
}

struct Table1Row {
  int n = 0;
  double r = 0.0;
  std::string method;
  std::string model_prior;
  double avg_prob = 0.0;
  double se = 0.0;
  int replicates = 0;
};

/// Posterior probability of the full model among the 2^p subsets, per method.
inline std::vector<double> full_model_probs(const Dataset &data, const Table1Config &cfg) {
  const int p = static_cast<int>(data.p());
  const auto stats = space_suffstats(data, ModelSpace::all_subsets(p));
  std::vector<double> out;
  for (std::size_t i = 0; i < cfg.methods.size(); ++i) {
    const auto space = ModelSpace::all_subsets(p, cfg.prior_for(i));
    out.push_back(posterior_from_stats(space, stats, cfg.methods[i]).posterior_prob.back());
  }
  return out;
}

/// Replicate `rep` of sample-size cell `ni`: both correlation signs reuse the
/// same raw design draws and the same errors.
inline std::vector<std::vector<double>> table1_replicate(const Table1Config &cfg, std::size_t ni, int rep) {
  const int n = cfg.sample_sizes[ni];
  const int nmax = *std::max_element(cfg.sample_sizes.begin(), cfg.sample_sizes.end());
  const int m = cfg.share_noise_across_n ? nmax : n;
  auto rng = cfg.share_noise_across_n ? derive_stream(cfg.seed, static_cast<std::uint64_t>(rep))
                                      : derive_stream(derive_seed(cfg.seed, ni), static_cast<std::uint64_t>(rep));
  const Eigen::MatrixXd raw = standard_normal_matrix(rng, m, 2).topRows(n);
  const Eigen::VectorXd eps = standard_normal_matrix(rng, m, 1).col(0).head(n);

  std::vector<std::vector<double>> out;
  for (double r : cfg.correlations) {
    const Eigen::MatrixXd x = correlated_design_from(raw, CorrelationSpec::pair(r));
    Eigen::VectorXd y = (x * cfg.beta + eps).array() + cfg.alpha;
    out.push_back(full_model_probs(orthogonalize(with_intercept(std::move(y), x)), cfg));
  }
  return out;
}

inline std::vector<Table1Row> run_table1(const Table1Config &cfg) {
  if (cfg.sample_sizes.empty() || cfg.correlations.empty() || cfg.methods.empty()) {
    throw ConfigError("table1 needs sample sizes, correlations and methods");
  }
  for (int n : cfg.sample_sizes)
    if (n < 4) throw ConfigError("table1 sample sizes must be at least 4");
  std::vector<Table1Row> rows;
  for (std::size_t ni = 0; ni < cfg.sample_sizes.size(); ++ni) {
    const auto reps = run_replicates(cfg.replicates, cfg.threads, [&](int rep) { return table1_replicate(cfg, ni, rep); });
    for (std::size_t ri = 0; ri < cfg.correlations.size(); ++ri) {
      for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
        MeanSe acc;
        for (const auto &r : reps) acc.add(r[ri][mi]);
        rows.push_back({cfg.sample_sizes[ni], cfg.correlations[ri], cfg.methods[mi].name(),
                        prior_name(cfg.prior_for(mi)), acc.mean(), acc.se(), cfg.replicates});
      }
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Eight-predictor loss studies (orthogonal and AR(1) designs).

struct FigureConfig {
  enum class Design { orthogonal, ar1 };

  Design design = Design::orthogonal;
  double rho = 0.9;
  int n = 50;
  int p = 8;
  double alpha = 2.0;
  double sigma2 = 1.0;
  std::vector<double> g_values = {5.0, 25.0};
  std::vector<int> k_values = {0, 1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<PriorMethod> methods = {PriorMethod::bic(), PriorMethod::ml2(), PriorMethod::lb(), PriorMethod::zs()};
  ModelSpace::Prior model_prior = ModelSpace::Prior::uniform_over_models;
  int replicates = 1000;
  std::uint64_t seed = 0;
  int threads = 1;

  std::string design_name() const { return design == Design::orthogonal ? "orthogonal" : "ar1"; }
};

/// Per method, for one replicate.
struct FigureOutcome {
  std::vector<std::array<double, 3>> loss;  // HPM, MPM, BMA
  std::vector<double> entropy;
  std::vector<double> mpm_match;
  std::vector<double> mpm_size;
  std::vector<double> hpm_match;
};

struct FigureLossRow {
  std::string design;
  double g = 0.0;
  int k = 0;
  std::string method;
  std::string selector;
  double avg_loss = 0.0;
  double se = 0.0;
  int replicates = 0;
};

struct FigureDiagRow {
  std::string design;
  double g = 0.0;
  int k = 0;
  std::string method;
  double entropy = 0.0;
  double se_entropy = 0.0;
  double mpm_match_rate = 0.0;
  double se_mpm_match = 0.0;
  double avg_mpm_size = 0.0;
  double se_mpm_size = 0.0;
  double hpm_match_rate = 0.0;
  double se_hpm_match = 0.0;
  int replicates = 0;
};

struct FigureResult {
  std::vector<FigureLossRow> loss;
  std::vector<FigureDiagRow> diag;
};

/// Centered design with X'X = I_p (orthogonal) or X'X/(n-1) = AR(1) target.
template <typename Rng>
Eigen::MatrixXd figure_design(const FigureConfig &cfg, Rng &rng) {
  const Eigen::MatrixXd raw = standard_normal_matrix(rng, cfg.n, cfg.p);
  if (cfg.design == FigureConfig::Design::orthogonal) {
    return correlated_design_from(raw, CorrelationSpec::identity()) / std::sqrt(static_cast<double>(cfg.n));
  }
  return correlated_design_from(raw, CorrelationSpec::ar1(cfg.rho)) *
         std::sqrt((cfg.n - 1.0) / static_cast<double>(cfg.n));
}

inline std::size_t model_index(const std::vector<Model> &models, const Model &m) {
  const auto it = std::find(models.begin(), models.end(), m);
  if (it == models.end()) throw InputError("model not in the enumerated space");
  return static_cast<std::size_t>(it - models.begin());
}

inline FigureOutcome figure_replicate(const FigureConfig &cfg, double g, int k, std::uint64_t cell_seed, int rep) {
  auto rng = derive_stream(cell_seed, static_cast<std::uint64_t>(rep));
  const Eigen::MatrixXd x = figure_design(cfg, rng);

  // Active set uniform over the C(p, k) placements.
  std::vector<int> order(static_cast<std::size_t>(cfg.p));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  Model truth(order.begin(), order.begin() + k);
  std::sort(truth.begin(), truth.end());
  std::normal_distribution<double> normal;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(cfg.p);
  for (int j : truth) beta(j) = std::sqrt(g) * normal(rng);
  Eigen::VectorXd y(cfg.n);
  const double sd = std::sqrt(cfg.sigma2);
  for (int i = 0; i < cfg.n; ++i) y(i) = cfg.alpha + sd * normal(rng);
  y += x * beta;

  const Dataset data = orthogonalize(with_intercept(std::move(y), x));
  const auto space = ModelSpace::all_subsets(cfg.p, cfg.model_prior);
  const auto stats = space_suffstats(data, space);
  const auto models = models_of(space);

  FigureOutcome out;
  for (const auto &method : cfg.methods) {
    const ModelPosterior post = posterior_from_stats(space, stats, method);
    std::vector<Estimate> est;
    est.reserve(models.size());
    for (std::size_t m = 0; m < models.size(); ++m) {
      const double s = stats[m].p_i == 0 ? 1.0 : shrinkage(stats[m], method);
      est.push_back(pad(models[m], s * stats[m].beta_hat, cfg.p));
    }
    const Model h = hpm(post);
    const Model med = mpm(post);
    const Eigen::VectorXd bma = bma_estimate(post, est);
    out.loss.push_back({predictive_loss(data.x, beta, est[model_index(models, h)].beta),
                        predictive_loss(data.x, beta, est[model_index(models, med)].beta),
                        predictive_loss(data.x, beta, bma)});
    out.entropy.push_back(entropy(post));
    out.mpm_match.push_back(med == truth ? 1.0 : 0.0);
    out.hpm_match.push_back(h == truth ? 1.0 : 0.0);
    out.mpm_size.push_back(static_cast<double>(med.size()));
  }
  return out;
}

/// Runs one (g, k) cell; the cell index labels its random stream.
inline std::vector<FigureOutcome> run_figure_cell(const FigureConfig &cfg, double g, int k, std::uint64_t cell) {
  if (k < 0 || k > cfg.p) throw ConfigError("active count k must lie in [0, p]");
  const std::uint64_t cell_seed = derive_seed(cfg.seed, cell);
  return run_replicates(cfg.replicates, cfg.threads, [&](int rep) { return figure_replicate(cfg, g, k, cell_seed, rep); });
}

inline FigureResult run_figure_sims(const FigureConfig &cfg) {
  if (cfg.n <= cfg.p + 1) throw ConfigError("figure simulations need n > p + 1");
  if (cfg.methods.empty()) throw ConfigError("no methods selected");
  FigureResult result;
  static const char *selectors[] = {"HPM", "MPM", "BMA"};
  for (std::size_t gi = 0; gi < cfg.g_values.size(); ++gi) {
    for (std::size_t ki = 0; ki < cfg.k_values.size(); ++ki) {
      const double g = cfg.g_values[gi];
      const int k = cfg.k_values[ki];
      if (!(g > 0.0)) throw ConfigError("g must be positive");
      // Stream label: position of g, value of k.
      const auto outcomes = run_figure_cell(cfg, g, k, gi * 1000 + static_cast<std::uint64_t>(k));
      for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi) {
        const std::string name = cfg.methods[mi].name();
        for (std::size_t si = 0; si < 3; ++si) {
          MeanSe acc;
          for (const auto &o : outcomes) acc.add(o.loss[mi][si]);
          result.loss.push_back({cfg.design_name(), g, k, name, selectors[si], acc.mean(), acc.se(), cfg.replicates});
        }
        MeanSe ent, match, size, hmatch;
        for (const auto &o : outcomes) {
          ent.add(o.entropy[mi]);
          match.add(o.mpm_match[mi]);
          size.add(o.mpm_size[mi]);
          hmatch.add(o.hpm_match[mi]);
        }
        result.diag.push_back({cfg.design_name(), g, k, name, ent.mean(), ent.se(), match.mean(), match.se(),
                               size.mean(), size.se(), hmatch.mean(), hmatch.se(), cfg.replicates});
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Single data set: all-subsets posterior per method.

struct BfResult {
  std::string method;
  ModelPosterior posterior;
  Model hpm;
  Model mpm;
  std::vector<double> inclusion;
};

inline std::vector<BfResult> run_bf(const Dataset &data, const std::vector<PriorMethod> &methods,
                                    ModelSpace::Prior prior = ModelSpace::Prior::uniform_over_models) {
  const auto space = ModelSpace::all_subsets(static_cast<int>(data.p()), prior);
  const auto stats = space_suffstats(data, space);
  std::vector<BfResult> out;
  for (const auto &m : methods) {
    BfResult r;
    r.method = m.name();
    r.posterior = posterior_from_stats(space, stats, m);
    r.hpm = hpm(r.posterior);
    r.mpm = mpm(r.posterior);
    r.inclusion = inclusion_probs(r.posterior);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace ml2bf::harness
