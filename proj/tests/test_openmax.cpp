//------------------------------------------------------------------------------
//
//   Copyright 2026 The mdcc Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

using namespace mdcc;
using namespace mdcc::root;

namespace {

Instance make_instance(std::string id, Vector f, ClassId label)
{
  Instance i;
  i.id       = std::move(id);
  i.features = std::move(f);
  i.label    = label;
  i.group_id = std::to_string(label);
  return i;
}

/// Identity network on 2-D input: logits equal the input.
nn::Network identity_net()
{
  nn::DenseLayer l{{2, 2, nn::Activation::identity}, Tensor({2, 2}, {1, 0, 0, 1}), Tensor({1, 2})};
  return nn::Network({l}, 0);
}

struct TrainedRoot
{
  Dataset               ds;
  std::vector<Instance> train;
  RootModel             model;
};

TrainedRoot const &trained_root()
{
  static TrainedRoot const fixture = [] {
    TrainedRoot f;
    f.ds    = fixture::small_synth(3, 16, 6.0, 200, 100, 21);
    f.train = fixture::of_classes(f.ds, Split::train, {1, 2, 3});
    f.model = train_root(f.train, {1, 2, 3}, fixture::fast_root_config());
    return f;
  }();
  return fixture;
}

}  // namespace

TEST(Revise, HandComputedExample)
{
  // ranks: class 0 (3.0) then class 1 (2.0); CDFs 0.5 and 0.2
  auto s = revise_activations({3.0, 2.0, 1.0}, {0.5, 0.2, 0.9}, 2);
  // rank 1: w = 1 - (2/2)*0.5 = 0.5; rank 2: w = 1 - (1/2)*0.2 = 0.9
  EXPECT_NEAR(s.revised[0], 1.5, 1e-15);
  EXPECT_NEAR(s.revised[1], 1.8, 1e-15);
  EXPECT_NEAR(s.revised[2], 1.0, 1e-15);
  EXPECT_NEAR(s.pseudo, 1.7, 1e-15);
  double const z = std::exp(1.7) + std::exp(1.5) + std::exp(1.8) + std::exp(1.0);
  EXPECT_NEAR(s.probabilities[0], std::exp(1.7) / z, 1e-15);
  EXPECT_NEAR(s.probabilities[2], std::exp(1.8) / z, 1e-15);
}

TEST(Revise, ZeroCdfKeepsActivations)
{
  Vector v{0.3, -1.2, 2.5};
  auto   s = revise_activations(v, {0.0, 0.0, 0.0}, 3);
  EXPECT_EQ(s.revised, v);
  EXPECT_EQ(s.pseudo, 0.0);
  auto plain = nn::softmax(Vector{0.0, 0.3, -1.2, 2.5});
  for (std::size_t i = 0; i < plain.size(); ++i)
  {
    EXPECT_NEAR(s.probabilities[i], plain[i], 1e-15);
  }
}

TEST(Revise, FullTransferAtAlphaOne)
{
  auto s = revise_activations({1.0, 4.0, 2.0}, {0.3, 1.0, 0.7}, 1);
  EXPECT_EQ(s.revised[1], 0.0);
  EXPECT_EQ(s.pseudo, 4.0);
  EXPECT_EQ(s.revised[0], 1.0);
  EXPECT_EQ(s.revised[2], 2.0);
}

TEST(Revise, ConservesTotalAndNormalizes)
{
  std::mt19937_64                        rng(12);
  std::uniform_real_distribution<double> act(-20, 20), cdf(0, 1);
  for (int t = 0; t < 1000; ++t)
  {
    std::size_t const k = 2 + static_cast<std::size_t>(t % 6);
    Vector            v(k), c(k);
    for (std::size_t i = 0; i < k; ++i)
    {
      v[i] = act(rng);
      c[i] = cdf(rng);
    }
    auto   s     = revise_activations(v, c, 1 + static_cast<std::size_t>(t) % k);
    double total = std::accumulate(s.revised.begin(), s.revised.end(), s.pseudo);
    EXPECT_NEAR(total, std::accumulate(v.begin(), v.end(), 0.0), 1e-9);
    double p = 0.0;
    for (double q : s.probabilities)
    {
      EXPECT_GE(q, 0.0);
      p += q;
    }
    EXPECT_NEAR(p, 1.0, 1e-9);
    EXPECT_EQ(s.probabilities.size(), k + 1);
  }
}

TEST(Revise, UnknownProbabilityGrowsWithCdfForPositiveActivations)
{
  std::mt19937_64                        rng(5);
  std::uniform_real_distribution<double> act(0, 10), cdf(0, 0.5), bump(0, 0.5);
  for (int t = 0; t < 500; ++t)
  {
    Vector v{act(rng), act(rng), act(rng), act(rng)};
    Vector c{cdf(rng), cdf(rng), cdf(rng), cdf(rng)};
    Vector c2 = c;
    for (double &x : c2)
    {
      x += bump(rng);
    }
    double before = revise_activations(v, c, 3).unknown_probability();
    double after  = revise_activations(v, c2, 3).unknown_probability();
    EXPECT_GE(after, before - 1e-15);
  }
}

TEST(Mavs, MeanOfCorrectInstancesInPenultimateSpace)
{
  // 2 -> 2 identity features, then a head that always picks class index 0
  nn::DenseLayer feat{{2, 2, nn::Activation::identity}, Tensor({2, 2}, {1, 0, 0, 1}), Tensor({1, 2})};
  nn::DenseLayer head{{2, 2, nn::Activation::identity}, Tensor({2, 2}, {1, 0, 1, 0}), Tensor({1, 2})};
  nn::Network    net({feat, head}, 0);
  std::vector<Instance> train{make_instance("a", {0, 2}, 7), make_instance("b", {2, 0}, 7),
                              make_instance("c", {5, 5}, 9)};
  // class 9 has no correctly classified instance
  EXPECT_THROW(compute_mavs(net, train, {7, 9}, ActivationSpace::penultimate), Error);
  train.pop_back();
  train.push_back(make_instance("c", {-5, -5}, 9));
  // head output for (-5,-5) is (-10, 0): class index 1 is correct
  auto mavs = compute_mavs(net, train, {7, 9}, ActivationSpace::penultimate);
  EXPECT_EQ(mavs[0], (Vector{1.0, 1.0}));
  EXPECT_EQ(mavs[1], (Vector{-5.0, -5.0}));
}

TEST(Mavs, MatchesTwoPassOracleOnTrainedNetwork)
{
  auto const &f = trained_root();
  for (auto space : {ActivationSpace::logits, ActivationSpace::penultimate})
  {
    auto mavs = compute_mavs(f.model.network, f.train, f.model.class_labels, space);
    for (std::size_t k = 0; k < 3; ++k)
    {
      std::vector<Vector> rows;
      for (auto const &inst : f.train)
      {
        if (*inst.label != f.model.class_labels[k])
        {
          continue;
        }
        auto out = f.model.network.forward(single_row(inst.features));
        if (argmax(out.logits.row(0)) != k)
        {
          continue;
        }
        rows.push_back(space == ActivationSpace::logits ? out.logits.row_vector(0) : out.penultimate.row_vector(0));
      }
      auto oracle = fixture::oracle_mean(rows);
      ASSERT_EQ(oracle.size(), mavs[k].size());
      for (std::size_t d = 0; d < oracle.size(); ++d)
      {
        EXPECT_NEAR(mavs[k][d], oracle[d], 1e-12);
      }
    }
  }
}

TEST(TrainRoot, SeparableClustersTrainAccurately)
{
  auto const &f = trained_root();
  EXPECT_GE(f.model.train_accuracy, 0.99);
  EXPECT_GE(fixture::nearest_centroid_accuracy(f.ds), 0.99);
  EXPECT_TRUE(f.model.calibrated());
  EXPECT_EQ(f.model.class_labels, (std::vector<ClassId>{1, 2, 3}));
  EXPECT_EQ(f.model.network.output_dim(), 3u);
}

TEST(TrainRoot, ConfigValuesAreUsedVerbatim)
{
  RootConfig cfg;
  EXPECT_EQ(cfg.learning_rate, 0.005);
  EXPECT_EQ(cfg.batch_size, 50u);
  EXPECT_EQ(cfg.alpha, 2u);
  EXPECT_EQ(cfg.gamma, 0.008);
  auto model = train_root(trained_root().train, {1, 2}, [] {
    RootConfig c = fixture::fast_root_config();
    c.gamma      = 0.123;
    c.alpha      = 1;
    return c;
  }());
  EXPECT_EQ(model.gamma, 0.123);
  EXPECT_EQ(model.alpha, 1u);
}

TEST(TrainRoot, ErrorCases)
{
  auto const &train = trained_root().train;
  EXPECT_THROW(train_root(train, {1}, fixture::fast_root_config()), Error);
  EXPECT_THROW(train_root(train, {1, 2, 99}, fixture::fast_root_config()), Error);
  RootConfig big_alpha = fixture::fast_root_config();
  big_alpha.alpha      = 3;
  EXPECT_THROW(train_root(train, {1, 2}, big_alpha), ConfigError);
  RootConfig big_batch = fixture::fast_root_config();
  big_batch.batch_size = 500;
  EXPECT_THROW(train_root(train, {1, 2}, big_batch), Error);
}

TEST(Calibrate, RecoversWeibullDistances)
{
  auto d = fixture::weibull_sample(2.0, 1.5, 2000, 31);
  std::vector<Instance> train;
  for (std::size_t i = 0; i < d.size(); ++i)
  {
    train.push_back(make_instance("p" + std::to_string(i), {20.0 + d[i], 0.0}, 1));
    train.push_back(make_instance("m" + std::to_string(i), {20.0 - d[i], 0.0}, 1));
  }
  for (int i = 0; i < 4000; ++i)
  {
    train.push_back(make_instance("o" + std::to_string(i), {0.0, 20.0 + 0.001 * i}, 2));
  }
  RootModel m;
  m.network      = identity_net();
  m.class_labels = {1, 2};
  m.mavs         = compute_mavs(m.network, train, m.class_labels, ActivationSpace::logits);
  EXPECT_NEAR(m.mavs[0][0], 20.0, 1e-9);
  auto w = calibrate(m, train, 2 * d.size());
  EXPECT_NEAR(w[0].shape, 2.0, 0.1);
  EXPECT_NEAR(w[0].scale, 1.5, 0.075);
}

TEST(Calibrate, ErrorCasesNameTheClass)
{
  std::vector<Instance> train;
  for (int i = 0; i < 5; ++i)
  {
    train.push_back(make_instance("a" + std::to_string(i), {3.0, 0.0}, 4));
    train.push_back(make_instance("b" + std::to_string(i), {0.0, 3.0 + i}, 6));
  }
  RootModel m;
  m.network      = identity_net();
  m.class_labels = {4, 6};
  m.mavs         = compute_mavs(m.network, train, m.class_labels, ActivationSpace::logits);
  try
  {
    calibrate(m, train, 6);
    FAIL() << "expected an error";
  }
  catch (Error const &e)
  {
    EXPECT_NE(std::string(e.what()).find("class 4"), std::string::npos) << e.what();
  }
  // class 4: every distance to its MAV is 0
  try
  {
    calibrate(m, train, 3);
    FAIL() << "expected an error";
  }
  catch (Error const &e)
  {
    EXPECT_NE(std::string(e.what()).find("class 4"), std::string::npos) << e.what();
  }
}

TEST(OpenMax, UncalibratedModelThrows)
{
  RootModel m;
  m.network      = identity_net();
  m.class_labels = {1, 2};
  Vector x{1.0, 2.0};
  EXPECT_THROW(openmax_scores(m, x), StateError);
}

TEST(OpenMax, ScoresFormAProbabilityVector)
{
  auto const &f = trained_root();
  for (auto const &inst : fixture::of_classes(f.ds, Split::test, {1, 2, 3, 4, 5}))
  {
    auto s = openmax_scores(f.model, inst.features);
    ASSERT_EQ(s.probabilities.size(), 4u);
    EXPECT_NEAR(std::accumulate(s.probabilities.begin(), s.probabilities.end(), 0.0), 1.0, 1e-9);
    EXPECT_NEAR(std::accumulate(s.revised.begin(), s.revised.end(), s.pseudo),
                std::accumulate(s.activations.begin(), s.activations.end(), 0.0), 1e-9);
  }
}

TEST(RootDecide, GammaExtremes)
{
  RootModel m = trained_root().model;
  auto      probes = fixture::of_classes(trained_root().ds, Split::test, {1, 2, 3, 4, 5});
  m.gamma          = 1.0;
  for (auto const &p : probes)
  {
    auto s = openmax_scores(m, p.features);
    if (s.unknown_probability() < 1.0)
    {
      EXPECT_TRUE(root_decide(m, p.features).has_value());
    }
  }
  m.gamma = 0.0;
  for (auto const &p : probes)
  {
    EXPECT_FALSE(root_decide(m, p.features).has_value());
  }
}

TEST(RootDecide, FarOutlierIsRejected)
{
  RootModel m = trained_root().model;
  m.gamma     = 0.1;
  Vector far(16, 0.0);
  // push along the direction of a class center, far beyond the training data
  auto const &train = trained_root().train;
  for (std::size_t d = 0; d < 16; ++d)
  {
    far[d] = 60.0 * train.front().features[d];
  }
  auto s = openmax_scores(m, far);
  for (std::size_t k = 0; k < 3; ++k)
  {
    EXPECT_GT(s.cdf[k], 0.999);
  }
  EXPECT_FALSE(root_decide(m, far).has_value());
}

TEST(RootDecide, AcceptsKnownClassesWithArgmaxLabel)
{
  auto const &f      = trained_root();
  std::size_t ok     = 0;
  auto        probes = fixture::of_classes(f.ds, Split::test, {1, 2, 3});
  for (auto const &p : probes)
  {
    auto d = root_decide(f.model, p.features);
    ok += (d && *d == *p.label) ? 1 : 0;
  }
  EXPECT_GE(static_cast<double>(ok) / static_cast<double>(probes.size()), 0.9);
}

TEST(RootDecide, ArgmaxRuleRejectsOnlyWhenUnknownWins)
{
  RootModel m      = trained_root().model;
  m.rejection_rule = RejectionRule::argmax;
  auto probes      = fixture::of_classes(trained_root().ds, Split::test, {1, 2, 3, 4, 5});
  for (auto const &p : probes)
  {
    auto s = openmax_scores(m, p.features);
    EXPECT_EQ(!root_decide(m, p.features).has_value(), argmax(s.probabilities) == 0);
  }
}

TEST(RootDecide, IsDeterministic)
{
  auto const &f = trained_root();
  for (auto const &p : fixture::of_classes(f.ds, Split::test, {4}))
  {
    EXPECT_EQ(root_decide(f.model, p.features), root_decide(f.model, p.features));
  }
}
