#pragma once

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ml2bf/bayesfactors.hpp"
#include "ml2bf/errors.hpp"
#include "ml2bf/regression.hpp"

namespace ml2bf {

struct ModelSpace {
  enum class Kind { all_subsets, nested };
  enum class Prior { uniform_over_models, uniform_over_size };

  Kind kind = Kind::all_subsets;
  /// p for all_subsets, k for nested.
  int size = 0;
  Prior model_prior = Prior::uniform_over_models;
  /// Nested spaces only: whether the intercept-only model (size 0) is included.
  bool include_null = false;

  static ModelSpace all_subsets(int p, Prior prior = Prior::uniform_over_models) {
    return {Kind::all_subsets, p, prior, true};
  }
  static ModelSpace nested(int k, bool include_null = false) {
    return {Kind::nested, k, Prior::uniform_over_size, include_null};
  }
};

inline std::string prior_name(ModelSpace::Prior p) {
  return p == ModelSpace::Prior::uniform_over_models ? "uniform_over_models" : "uniform_over_size";
}

inline ModelSpace::Prior parse_prior(const std::string &v) {
  if (v == "uniform_over_models") return ModelSpace::Prior::uniform_over_models;
  if (v == "uniform_over_size") return ModelSpace::Prior::uniform_over_size;
  throw ConfigError("model prior must be uniform_over_models or uniform_over_size, got '" + v + "'");
}

/// Models of a space in canonical order: all_subsets by bitmask 0..2^p-1
/// (bit j set means predictor j is in), nested by size.
inline std::vector<Model> models_of(const ModelSpace &space) {
  std::vector<Model> out;
  if (space.kind == ModelSpace::Kind::all_subsets) {
    if (space.size < 0 || space.size > 25) throw InputError("all-subsets enumeration needs 0 <= p <= 25");
    const std::uint32_t count = 1u << space.size;
    out.reserve(count);
    for (std::uint32_t mask = 0; mask < count; ++mask) {
      Model m;
      for (int j = 0; j < space.size; ++j)
        if (mask & (1u << j)) m.push_back(j);
      out.push_back(std::move(m));
    }
  } else {
    if (space.size < 1) throw InputError("nested model space needs k >= 1");
    for (int j = space.include_null ? 0 : 1; j <= space.size; ++j) {
      Model m(static_cast<std::size_t>(j));
      for (int i = 0; i < j; ++i) m[static_cast<std::size_t>(i)] = i;
      out.push_back(std::move(m));
    }
  }
  return out;
}

struct ModelPosterior {
  ModelSpace space;
  std::vector<Model> models;
  std::vector<double> log_evidence;
  std::vector<double> log_prior;
  std::vector<double> posterior_prob;

  std::size_t size() const { return models.size(); }
  /// Number of candidate predictors the models index into.
  int predictor_count() const { return space.size; }
  bool has_infinite_evidence() const {
    return std::any_of(log_evidence.begin(), log_evidence.end(), [](double v) { return std::isinf(v) && v > 0; });
  }
};

namespace detail {

inline double log_choose(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// Parsimony first, then lexicographic on the sorted index lists.
inline bool preferred(const Model &a, const Model &b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

}  // namespace detail

inline std::vector<double> log_model_prior(const ModelSpace &space, const std::vector<Model> &models) {
  std::vector<double> out(models.size(), 0.0);
  if (space.model_prior == ModelSpace::Prior::uniform_over_models) return out;
  int sizes = 0;
  if (space.kind == ModelSpace::Kind::nested) {
    // Each size appears once, so uniform over sizes is uniform over models.
    return out;
  }
  sizes = space.size + 1;
  for (std::size_t m = 0; m < models.size(); ++m) {
    out[m] = -std::log(static_cast<double>(sizes)) -
             detail::log_choose(space.size, static_cast<int>(models[m].size()));
  }
  return out;
}

/// Normalizes log evidence plus log prior by max-shifted exponentiation.
/// Models with +inf evidence take all the mass; if there are several, the
/// parsimony tie rule picks one.
inline ModelPosterior make_posterior(ModelSpace space, std::vector<Model> models, std::vector<double> log_evidence,
                                     std::vector<double> log_prior = {}) {
  if (models.empty()) throw InputError("model space is empty");
  if (log_evidence.size() != models.size()) throw InputError("one log evidence per model is required");
  if (log_prior.empty()) log_prior.assign(models.size(), 0.0);
  if (log_prior.size() != models.size()) throw InputError("one log prior per model is required");

  ModelPosterior post;
  post.space = space;
  post.models = std::move(models);
  post.log_evidence = std::move(log_evidence);
  post.log_prior = std::move(log_prior);
  post.posterior_prob.assign(post.models.size(), 0.0);

  if (std::any_of(post.log_evidence.begin(), post.log_evidence.end(), [](double v) { return std::isnan(v); })) {
    throw NumericalError("log evidence is NaN");
  }
  if (post.has_infinite_evidence()) {
    std::size_t pick = post.models.size();
    for (std::size_t m = 0; m < post.models.size(); ++m) {
      if (!(std::isinf(post.log_evidence[m]) && post.log_evidence[m] > 0)) continue;
      if (pick == post.models.size() || detail::preferred(post.models[m], post.models[pick])) pick = m;
    }
    post.posterior_prob[pick] = 1.0;
    return post;
  }

  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < post.models.size(); ++m) top = std::max(top, post.log_evidence[m] + post.log_prior[m]);
  if (!std::isfinite(top)) throw NumericalError("every model has zero posterior weight");
  double total = 0.0;
  for (std::size_t m = 0; m < post.models.size(); ++m) {
    post.posterior_prob[m] = std::exp(post.log_evidence[m] + post.log_prior[m] - top);
    total += post.posterior_prob[m];
  }
  for (double &p : post.posterior_prob) p /= total;
  return post;
}

/// Statistics of every model in the space, in canonical order.
inline std::vector<SuffStats> space_suffstats(const Dataset &data, const ModelSpace &space) {
  const auto models = models_of(space);
  if (space.kind == ModelSpace::Kind::all_subsets && space.size != data.p()) {
    throw InputError("model space size does not match the number of predictors");
  }
  std::vector<SuffStats> out;
  out.reserve(models.size());
  if (space.kind == ModelSpace::Kind::nested) {
    if (space.include_null) out.push_back(fit_suffstats(data, {}));
    auto nested = fit_nested_suffstats(data, space.size);
    for (auto &s : nested) out.push_back(std::move(s));
    return out;
  }
  for (const auto &m : models) out.push_back(fit_suffstats(data, m));
  return out;
}

/// Posterior from precomputed statistics (one per model, canonical order).
inline ModelPosterior posterior_from_stats(const ModelSpace &space, const std::vector<SuffStats> &stats,
                                           const PriorMethod &method) {
  auto models = models_of(space);
  if (stats.size() != models.size()) throw InputError("one statistics record per model is required");
  std::vector<double> evidence(models.size());
  for (std::size_t m = 0; m < models.size(); ++m) {
    try {
      evidence[m] = log_bf(stats[m], method);
    } catch (const NumericalError &e) {
      throw NumericalError("model " + std::to_string(m) + ": " + e.what());
    } catch (const InputError &e) {
      throw InputError("model " + std::to_string(m) + ": " + e.what());
    }
  }
  auto prior = log_model_prior(space, models);
  return make_posterior(space, std::move(models), std::move(evidence), std::move(prior));
}

/// Enumerates the space, giving each model its own locally fitted prior.
inline ModelPosterior enumerate_models(const Dataset &data, const ModelSpace &space, const PriorMethod &method) {
  return posterior_from_stats(space, space_suffstats(data, space), method);
}

namespace detail {

inline bool nearly_equal(double a, double b) {
  return std::abs(a - b) <= 8.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(a), std::abs(b));
}

}  // namespace detail

/// Highest probability model; ties go to the smaller model, then lexicographic.
inline Model hpm(const ModelPosterior &post) {
  if (post.models.empty()) throw InputError("empty posterior");
  std::size_t best = 0;
  for (std::size_t m = 1; m < post.size(); ++m) {
    const double a = post.posterior_prob[m];
    const double b = post.posterior_prob[best];
    if (detail::nearly_equal(a, b)) {
      if (detail::preferred(post.models[m], post.models[best])) best = m;
    } else if (a > b) {
      best = m;
    }
  }
  return post.models[best];
}

/// Posterior probability that each predictor is in the model.
inline std::vector<double> inclusion_probs(const ModelPosterior &post) {
  std::vector<double> q(static_cast<std::size_t>(post.predictor_count()), 0.0);
  for (std::size_t m = 0; m < post.size(); ++m)
    for (int j : post.models[m]) q[static_cast<std::size_t>(j)] += post.posterior_prob[m];
  for (double &v : q) v = std::clamp(v, 0.0, 1.0);
  return q;
}

/// Median probability model. All-subsets: predictors with inclusion
/// probability >= 1/2. Nested: the largest size j with P(size >= j) >= 1/2.
inline Model mpm(const ModelPosterior &post) {
  if (post.models.empty()) throw InputError("empty posterior");
  if (post.space.kind == ModelSpace::Kind::nested) {
    std::vector<double> by_size(static_cast<std::size_t>(post.space.size) + 1, 0.0);
    for (std::size_t m = 0; m < post.size(); ++m) by_size[post.models[m].size()] += post.posterior_prob[m];
    double tail = 0.0;
    for (int j = post.space.size; j >= 1; --j) {
      tail += by_size[static_cast<std::size_t>(j)];
      if (tail >= 0.5) {
        Model out(static_cast<std::size_t>(j));
        for (int i = 0; i < j; ++i) out[static_cast<std::size_t>(i)] = i;
        return out;
      }
    }
    return post.space.include_null ? Model{} : Model{0};
  }
  const auto q = inclusion_probs(post);
  Model out;
  for (std::size_t j = 0; j < q.size(); ++j)
    if (q[j] >= 0.5) out.push_back(static_cast<int>(j));
  return out;
}

/// Shannon entropy (natural log) of the posterior over models.
inline double entropy(const ModelPosterior &post) {
  double h = 0.0;
  for (double p : post.posterior_prob)
    if (p > 0.0) h -= p * std::log(p);
  return std::max(0.0, h);
}

/// Array of {model, log_evidence, prob}; model indices are 1-based to match
/// the x1..xp column names.
inline nlohmann::json to_json(const ModelPosterior &post) {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t m = 0; m < post.size(); ++m) {
    std::vector<int> one_based;
    for (int j : post.models[m]) one_based.push_back(j + 1);
    const double le = post.log_evidence[m];
    nlohmann::json row = {{"model", one_based}, {"prob", post.posterior_prob[m]}};
    if (std::isfinite(le)) {
      row["log_evidence"] = le;
    } else {
      row["log_evidence"] = le > 0 ? "inf" : "-inf";
    }
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace ml2bf
