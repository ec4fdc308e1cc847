#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ml2bf/bayesfactors.hpp"
#include "ml2bf/modelspace.hpp"
#include "support.hpp"

using namespace ml2bf;

namespace {

ModelPosterior two_predictor_posterior(std::vector<double> probs) {
  std::vector<double> log_ev;
  for (double p : probs) log_ev.push_back(std::log(p));
  const auto space = ModelSpace::all_subsets(2);
  return make_posterior(space, models_of(space), log_ev);
}

}  // namespace

TEST(ModelsOf, AllSubsetsCount) {
  EXPECT_EQ(models_of(ModelSpace::all_subsets(8)).size(), 256u);
  const auto nested = models_of(ModelSpace::nested(5));
  ASSERT_EQ(nested.size(), 5u);
  EXPECT_EQ(nested.front(), Model{0});
  EXPECT_EQ(models_of(ModelSpace::nested(5, true)).front(), Model{});
  EXPECT_THROW(models_of(ModelSpace::all_subsets(26)), InputError);
}

TEST(MakePosterior, SymmetricPair) {
  const auto space = ModelSpace::all_subsets(1);
  const auto post = make_posterior(space, models_of(space), {1.3, 1.3});
  EXPECT_DOUBLE_EQ(post.posterior_prob[0], 0.5);
  EXPECT_DOUBLE_EQ(post.posterior_prob[1], 0.5);
}

TEST(MakePosterior, SumsToOneWithHugeEvidence) {
  const auto space = ModelSpace::all_subsets(2);
  const auto post = make_posterior(space, models_of(space), {0.0, 3000.0, 2999.0, -500.0});
  double total = std::accumulate(post.posterior_prob.begin(), post.posterior_prob.end(), 0.0);
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_NEAR(post.posterior_prob[1] / post.posterior_prob[2], std::exp(1.0), 1e-12);
}

TEST(MakePosterior, InfiniteMarkersTakeAllMass) {
  const auto space = ModelSpace::all_subsets(2);
  const auto post = make_posterior(space, models_of(space), {0.0, 5.0, kInfiniteEvidence, kInfiniteEvidence});
  EXPECT_EQ(post.posterior_prob[2], 1.0);
  EXPECT_EQ(hpm(post), Model{1});
}

TEST(MakePosterior, UniformOverSizePrior) {
  const auto space = ModelSpace::all_subsets(3, ModelSpace::Prior::uniform_over_size);
  const auto models = models_of(space);
  const auto post = make_posterior(space, models, std::vector<double>(models.size(), 0.0),
                                   log_model_prior(space, models));
  std::vector<double> by_size(4, 0.0);
  for (std::size_t m = 0; m < post.size(); ++m) by_size[post.models[m].size()] += post.posterior_prob[m];
  for (double v : by_size) EXPECT_NEAR(v, 0.25, 1e-12);
}

TEST(Hpm, Basics) {
  const auto single = make_posterior(ModelSpace::all_subsets(0), {Model{}}, {0.0});
  EXPECT_EQ(hpm(single), Model{});
  const auto space = ModelSpace::all_subsets(1);
  EXPECT_EQ(hpm(make_posterior(space, models_of(space), {std::log(0.7), std::log(0.3)})), Model{});
  EXPECT_EQ(hpm(two_predictor_posterior({0.1, 0.2, 0.3, 0.4})), (Model{0, 1}));
}

TEST(Hpm, TieGoesToSmallerModel) {
  EXPECT_EQ(hpm(two_predictor_posterior({0.1, 0.2, 0.1, 0.2 * (1 + 1e-16)})), Model{0});
  EXPECT_EQ(hpm(two_predictor_posterior({0.1, 0.3, 0.3, 0.3})), Model{0});
}

TEST(Mpm, PointMass) {
  const auto space = ModelSpace::all_subsets(2);
  const auto post = make_posterior(space, models_of(space), {-1e3, -1e3, 0.0, -1e3});
  EXPECT_EQ(mpm(post), Model{1});
}

TEST(Mpm, InclusionSums) {
  const auto post = two_predictor_posterior({0.4, 0.2, 0.2, 0.2});
  const auto q = inclusion_probs(post);
  EXPECT_NEAR(q[0], 0.4, 1e-12);
  EXPECT_NEAR(q[1], 0.4, 1e-12);
  EXPECT_EQ(mpm(post), Model{});
}

TEST(Mpm, NestedCumulativeRule) {
  const auto space = ModelSpace::nested(3);
  const auto post = make_posterior(space, models_of(space), {std::log(0.3), std::log(0.3), std::log(0.4)});
  EXPECT_EQ(mpm(post).size(), 2u);
}

TEST(InclusionProbs, Extremes) {
  const auto full = two_predictor_posterior({1e-300, 1e-300, 1e-300, 1.0});
  for (double v : inclusion_probs(full)) EXPECT_NEAR(v, 1.0, 1e-12);
  const auto empty = two_predictor_posterior({1.0, 1e-300, 1e-300, 1e-300});
  for (double v : inclusion_probs(empty)) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Entropy, Values) {
  const auto space = ModelSpace::all_subsets(8);
  const auto models = models_of(space);
  EXPECT_NEAR(entropy(make_posterior(space, models, std::vector<double>(256, 0.0))), std::log(256.0), 1e-12);
  std::vector<double> spike(256, -1e4);
  spike[17] = 0.0;
  EXPECT_EQ(entropy(make_posterior(space, models, spike)), 0.0);
  const auto small = make_posterior(ModelSpace::all_subsets(2), models_of(ModelSpace::all_subsets(2)),
                                    {std::log(0.5), std::log(0.25), std::log(0.25), -1e4});
  EXPECT_NEAR(entropy(small), 1.5 * std::log(2.0), 1e-12);
}

TEST(Entropy, DropsWhenModeGrows) {
  const auto space = ModelSpace::all_subsets(2);
  const auto models = models_of(space);
  std::vector<double> ev = {0.0, 1.0, 0.5, 0.2};
  double prev = entropy(make_posterior(space, models, ev));
  for (int t = 0; t < 10; ++t) {
    ev[1] += 0.3;
    const double h = entropy(make_posterior(space, models, ev));
    EXPECT_LT(h, prev);
    prev = h;
  }
}

TEST(EnumerateModels, MatchesIsolatedRecomputation) {
  auto rng = derive_stream(21, 0);
  const Dataset d = fixtures::random_dataset(rng, 40, 8, 0.6);
  const auto space = ModelSpace::all_subsets(8);
  const auto post = enumerate_models(d, space, PriorMethod::lb());
  for (std::size_t m = 0; m < post.size(); ++m) {
    const SuffStats s = fit_suffstats(d, post.models[m]);
    EXPECT_EQ(post.log_evidence[m], log_bf_gprior(s, 40.0)) << m;
  }
}

TEST(EnumerateModels, OrderInvariant) {
  auto rng = derive_stream(22, 0);
  const Dataset d = fixtures::random_dataset(rng, 30, 4, 0.6);
  const auto space = ModelSpace::all_subsets(4);
  const auto post = enumerate_models(d, space, PriorMethod::ml2());
  std::vector<std::size_t> order(post.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Model> models;
  std::vector<double> ev;
  for (auto i : order) {
    models.push_back(post.models[i]);
    ev.push_back(post.log_evidence[i]);
  }
  const auto shuffled = make_posterior(space, models, ev);
  for (std::size_t k = 0; k < order.size(); ++k)
    EXPECT_NEAR(shuffled.posterior_prob[k], post.posterior_prob[order[k]], 1e-14);
  EXPECT_EQ(hpm(shuffled), hpm(post));
  EXPECT_EQ(mpm(shuffled), mpm(post));
}

TEST(EnumerateModels, PosteriorOrderingChains) {
  auto rng = derive_stream(23, 0);
  for (int t = 0; t < 50; ++t) {
    const Dataset d = fixtures::random_dataset(rng, 12 + t, 3, 0.5);
    const auto space = ModelSpace::all_subsets(3);
    const auto bic = enumerate_models(d, space, PriorMethod::bic());
    const auto ml = enumerate_models(d, space, PriorMethod::ml2());
    const auto lb = enumerate_models(d, space, PriorMethod::lb());
    const std::size_t full = 7;
    EXPECT_GE(bic.posterior_prob[full], ml.posterior_prob[full] - 1e-12);
    EXPECT_GE(ml.posterior_prob[full], lb.posterior_prob[full] - 1e-12);
    EXPECT_LE(bic.posterior_prob[0], ml.posterior_prob[0] + 1e-12);
    EXPECT_LE(ml.posterior_prob[0], lb.posterior_prob[0] + 1e-12);
  }
}

TEST(ToJson, Layout) {
  const auto post = two_predictor_posterior({0.4, 0.2, 0.2, 0.2});
  const auto j = to_json(post);
  ASSERT_EQ(j.size(), 4u);
  EXPECT_EQ(j[3]["model"], nlohmann::json::array({1, 2}));
  EXPECT_NEAR(j[0]["prob"].get<double>(), 0.4, 1e-12);
}
