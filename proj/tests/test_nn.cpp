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
#include <random>

using namespace mdcc;
using namespace mdcc::nn;

namespace {

Tensor random_batch(std::size_t n, std::size_t d, std::uint64_t seed)
{
  std::mt19937_64                  rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Tensor                           t({n, d});
  for (double &v : t.values())
  {
    v = g(rng);
  }
  return t;
}

std::vector<std::size_t> random_labels(std::size_t n, std::size_t k, std::uint64_t seed)
{
  std::mt19937_64                            rng(seed);
  std::uniform_int_distribution<std::size_t> u(0, k - 1);
  std::vector<std::size_t>                   out(n);
  for (auto &l : out)
  {
    l = u(rng);
  }
  return out;
}

Network single_layer(std::size_t in, std::size_t out, Vector weight, Vector bias = {})
{
  DenseLayer l{{in, out, Activation::identity}, Tensor({in, out}, std::move(weight)), Tensor({1, out})};
  if (!bias.empty())
  {
    l.bias = Tensor({1, out}, std::move(bias));
  }
  return Network({l}, 0);
}

}  // namespace

TEST(Tensor, ShapeAndDataMustAgree)
{
  EXPECT_THROW(Tensor({2, 2}, Vector(3)), ShapeError);
  Tensor t({2, 3});
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  t(1, 2) = 5.0;
  EXPECT_DOUBLE_EQ(t[5], 5.0);
}

TEST(Forward, IdentityLayerPassesInputThrough)
{
  auto net = single_layer(2, 2, {1, 0, 0, 1});
  auto out = net.forward(Tensor({1, 2}, {1, 2}));
  EXPECT_DOUBLE_EQ(out.logits(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(out.logits(0, 1), 2.0);
}

TEST(Forward, ZeroWeightsGiveZeroLogits)
{
  Network net(make_stack(4, {5}, 3), 1);
  for (Tensor *p : net.parameters())
  {
    p->fill(0.0);
  }
  auto out = net.forward(random_batch(3, 4, 1));
  for (double v : out.logits.values())
  {
    EXPECT_EQ(v, 0.0);
  }
}

TEST(Forward, MatchesHandRolledMatrixTrace)
{
  // 2 -> 3 (relu) -> 2
  DenseLayer l0{{2, 3, Activation::relu}, Tensor({2, 3}, {0.5, -1.0, 0.25, 1.5, 0.5, -0.75}), Tensor({1, 3}, {0.1, 0.2, -0.3})};
  DenseLayer l1{{3, 2, Activation::identity}, Tensor({3, 2}, {1.0, -0.5, 2.0, 0.25, -1.0, 0.75}), Tensor({1, 2}, {0.05, -0.05})};
  Network    net({l0, l1}, 0);
  double const x0 = 0.8, x1 = -0.4;
  // hidden pre-activations: x W0 + b0
  double h0 = std::max(0.0, x0 * 0.5 + x1 * 1.5 + 0.1);
  double h1 = std::max(0.0, x0 * -1.0 + x1 * 0.5 + 0.2);
  double h2 = std::max(0.0, x0 * 0.25 + x1 * -0.75 - 0.3);
  double y0 = h0 * 1.0 + h1 * 2.0 + h2 * -1.0 + 0.05;
  double y1 = h0 * -0.5 + h1 * 0.25 + h2 * 0.75 - 0.05;
  auto   out = net.forward(Tensor({1, 2}, {x0, x1}));
  EXPECT_NEAR(out.logits(0, 0), y0, 1e-15);
  EXPECT_NEAR(out.logits(0, 1), y1, 1e-15);
  EXPECT_NEAR(out.penultimate(0, 0), h0, 1e-15);
  EXPECT_NEAR(out.penultimate(0, 1), h1, 1e-15);
  EXPECT_NEAR(out.penultimate(0, 2), h2, 1e-15);
}

TEST(Forward, DimensionMismatchThrows)
{
  Network net(make_stack(4, {5}, 3), 1);
  EXPECT_THROW(net.forward(random_batch(2, 3, 1)), ShapeError);
}

TEST(Forward, IsPure)
{
  Network net(make_stack(6, {8, 4}, 3), 9);
  auto    x = random_batch(5, 6, 2);
  EXPECT_EQ(net.forward(x).logits, net.forward(x).logits);
}

TEST(Network, LayerChainIsValidated)
{
  EXPECT_THROW(Network(std::vector<LayerSpec>{{2, 3, Activation::relu}, {4, 2, Activation::identity}}, 1), ShapeError);
  DenseLayer bad{{2, 2, Activation::identity}, Tensor({3, 2}), Tensor({1, 2})};
  EXPECT_THROW(Network({bad}, 0), ShapeError);
}

TEST(Network, SeededInitIsGlorotUniformAndReproducible)
{
  Network a(make_stack(10, {20}, 5), 42), b(make_stack(10, {20}, 5), 42), c(make_stack(10, {20}, 5), 43);
  EXPECT_EQ(a.layers()[0].weight, b.layers()[0].weight);
  EXPECT_NE(a.layers()[0].weight, c.layers()[0].weight);
  double const limit = std::sqrt(6.0 / 30.0);
  for (double w : a.layers()[0].weight.values())
  {
    EXPECT_LE(std::abs(w), limit);
  }
  for (double v : a.layers()[0].bias.values())
  {
    EXPECT_EQ(v, 0.0);
  }
}

TEST(Softmax, ClosedFormValues)
{
  auto p = softmax(Tensor({1, 2}, {0, 0}));
  EXPECT_DOUBLE_EQ(p(0, 0), 0.5);
  auto q = softmax(Tensor({1, 2}, {1000, 1000}));
  EXPECT_DOUBLE_EQ(q(0, 1), 0.5);
  auto r = softmax(Tensor({1, 2}, {std::log(1.0), std::log(3.0)}));
  EXPECT_NEAR(r(0, 0), 0.25, 1e-15);
  EXPECT_NEAR(r(0, 1), 0.75, 1e-15);
}

TEST(Softmax, RowsSumToOneAndShiftInvariant)
{
  std::mt19937_64                        rng(3);
  std::uniform_real_distribution<double> u(-500, 500);
  for (int trial = 0; trial < 200; ++trial)
  {
    Tensor t({3, 7});
    for (double &v : t.values())
    {
      v = u(rng);
    }
    Tensor shifted = t;
    double c       = u(rng);
    for (std::size_t r = 0; r < 3; ++r)
    {
      for (std::size_t k = 0; k < 7; ++k)
      {
        shifted(r, k) = t(r, k) + c;
      }
    }
    auto p = softmax(t), q = softmax(shifted);
    for (std::size_t r = 0; r < 3; ++r)
    {
      double s = 0.0;
      for (std::size_t k = 0; k < 7; ++k)
      {
        EXPECT_GE(p(r, k), 0.0);
        EXPECT_NEAR(p(r, k), q(r, k), 1e-12);
        s += p(r, k);
      }
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
  }
}

TEST(Softmax, NanInputThrows)
{
  EXPECT_THROW(softmax(Tensor({1, 2}, {NAN, 0.0})), Error);
}

TEST(CrossEntropy, ClosedFormValues)
{
  std::vector<std::size_t> l0{0};
  EXPECT_NEAR(cross_entropy(Tensor({1, 2}, {0, 0}), l0).loss, std::log(2.0), 1e-15);
  EXPECT_NEAR(cross_entropy(Tensor({1, 2}, {50, -50}), l0).loss, 0.0, 1e-15);
  std::vector<std::size_t> bad{2};
  EXPECT_THROW(cross_entropy(Tensor({1, 2}, {0, 0}), bad), Error);
}

TEST(CrossEntropy, GradientIsSoftmaxMinusOneHotOverBatch)
{
  auto logits = random_batch(4, 3, 5);
  auto labels = random_labels(4, 3, 6);
  auto ce     = cross_entropy(logits, labels);
  EXPECT_GE(ce.loss, 0.0);
  auto p = softmax(logits);
  for (std::size_t r = 0; r < 4; ++r)
  {
    for (std::size_t k = 0; k < 3; ++k)
    {
      double expect = (p(r, k) - (labels[r] == k ? 1.0 : 0.0)) / 4.0;
      EXPECT_NEAR(ce.grad(r, k), expect, 1e-15);
    }
  }
  // finite differences on the logits themselves
  for (std::size_t i = 0; i < logits.size(); ++i)
  {
    Tensor up = logits, down = logits;
    up[i] += 1e-6;
    down[i] -= 1e-6;
    double fd = (cross_entropy(up, labels).loss - cross_entropy(down, labels).loss) / 2e-6;
    EXPECT_NEAR(ce.grad[i], fd, 1e-4 * std::max(1.0, std::abs(fd)));
  }
}

TEST(Backward, RequiresRecordedForward)
{
  Network net(make_stack(3, {4}, 2), 1);
  Tape    empty;
  EXPECT_THROW(backward(net, empty, Tensor({1, 2})), StateError);
}

TEST(Backward, ZeroUpstreamGivesZeroGradients)
{
  Network net(make_stack(3, {4}, 2), 1);
  auto    tape  = net.record(random_batch(5, 3, 1));
  auto    grads = backward(net, tape, Tensor({5, 2}));
  for (auto const &g : grads.tensors)
  {
    for (double v : g.values())
    {
      EXPECT_EQ(v, 0.0);
    }
  }
}

TEST(Backward, SingleLinearLayerWeightGradIsXTransposeG)
{
  auto   net  = single_layer(3, 2, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6});
  auto   x    = random_batch(4, 3, 8);
  auto   g    = random_batch(4, 2, 9);
  auto   tape = net.record(x);
  auto   gr   = backward(net, tape, g);
  for (std::size_t i = 0; i < 3; ++i)
  {
    for (std::size_t o = 0; o < 2; ++o)
    {
      double s = 0.0;
      for (std::size_t r = 0; r < 4; ++r)
      {
        s += x(r, i) * g(r, o);
      }
      EXPECT_NEAR(gr.tensors[0](i, o), s, 1e-14);
    }
  }
  for (std::size_t o = 0; o < 2; ++o)
  {
    double s = 0.0;
    for (std::size_t r = 0; r < 4; ++r)
    {
      s += g(r, o);
    }
    EXPECT_NEAR(gr.tensors[1](0, o), s, 1e-14);
  }
}

TEST(Backward, TwoLayerReluMatchesIndependentFiniteDifferences)
{
  Network net(make_stack(5, {7}, 3), 11);
  auto    x      = random_batch(6, 5, 12);
  auto    labels = random_labels(6, 3, 13);
  auto    a      = analytic_gradient(net, x, labels);
  auto    oracle = fixture::oracle_gradient(net.layers(), x, labels, 1e-5);
  ASSERT_EQ(a.tensors.size(), oracle.size());
  for (std::size_t t = 0; t < oracle.size(); ++t)
  {
    for (std::size_t k = 0; k < oracle[t].size(); ++k)
    {
      double const an = a.tensors[t][k], nu = oracle[t][k];
      EXPECT_LT(std::abs(an - nu) / std::max(1e-8, std::abs(an) + std::abs(nu)), 1e-4) << t << ":" << k;
    }
  }
}

TEST(Backward, PenultimateGradientMatchesFiniteDifferences)
{
  // loss = sum(h * c) for a fixed c; dL/dh = c
  Network net(make_stack(4, {6, 5}, 3, Activation::identity), 21);
  auto    x = random_batch(3, 4, 22);
  auto    c = random_batch(3, 5, 23);
  auto    loss = [&](Network const &n) {
    auto   h = n.forward(x).penultimate;
    double s = 0.0;
    for (std::size_t i = 0; i < h.size(); ++i)
    {
      s += h[i] * c[i];
    }
    return s;
  };
  auto    grads = backward(net, net.record(x), Tensor{}, c);
  Network probe = net;
  auto    params = probe.parameters();
  for (std::size_t t = 0; t < params.size(); ++t)
  {
    for (std::size_t k = 0; k < params[t]->size(); ++k)
    {
      double const saved = (*params[t])[k];
      (*params[t])[k]    = saved + 1e-6;
      double up          = loss(probe);
      (*params[t])[k]    = saved - 1e-6;
      double down        = loss(probe);
      (*params[t])[k]    = saved;
      double fd          = (up - down) / 2e-6;
      EXPECT_NEAR(grads.tensors[t][k], fd, 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST(Optimizer, SgdStep)
{
  Tensor p({1}, {1.0});
  Gradients g{{Tensor({1}, {2.0})}};
  OptimizerState s;
  s.kind          = OptimizerKind::sgd;
  s.learning_rate = 0.1;
  Tensor *ps[] = {&p};
  optimizer_step(s, ps, g);
  EXPECT_NEAR(p[0], 0.8, 1e-15);
  EXPECT_EQ(s.step, 1u);
}

TEST(Optimizer, ZeroGradientLeavesParametersUnchanged)
{
  for (auto kind : {OptimizerKind::sgd, OptimizerKind::adam})
  {
    Tensor         p({2}, {1.5, -2.5});
    Gradients      g{{Tensor({2})}};
    OptimizerState s;
  s.kind          = kind;
  s.learning_rate = 0.01;
    Tensor        *ps[] = {&p};
    optimizer_step(s, ps, g);
    EXPECT_EQ(p[0], 1.5);
    EXPECT_EQ(p[1], -2.5);
  }
}

TEST(Optimizer, FirstAdamStepClosedForm)
{
  Tensor         p({1}, {0.0});
  Gradients      g{{Tensor({1}, {1.0})}};
  OptimizerState s;
  s.kind          = OptimizerKind::adam;
  s.learning_rate = 0.001;
  Tensor        *ps[] = {&p};
  optimizer_step(s, ps, g);
  // m_hat = 1, v_hat = 1: step = lr * 1 / (1 + eps)
  EXPECT_NEAR(p[0], -0.001 / (1.0 + 1e-8), 1e-15);
  EXPECT_EQ(s.step, 1u);
  ASSERT_EQ(s.first_moment.size(), 1u);
  EXPECT_EQ(s.first_moment[0].shape(), p.shape());
}

TEST(Optimizer, NonFiniteGradientThrowsWithoutMutation)
{
  Tensor         p({2}, {1.0, 2.0});
  Gradients      g{{Tensor({2}, {0.5, INFINITY})}};
  OptimizerState s;
  s.kind          = OptimizerKind::adam;
  s.learning_rate = 0.01;
  Tensor        *ps[] = {&p};
  EXPECT_THROW(optimizer_step(s, ps, g), Error);
  EXPECT_EQ(p[0], 1.0);
  EXPECT_EQ(s.step, 0u);
}

TEST(Optimizer, ShapeMismatchThrows)
{
  Tensor         p({2});
  Gradients      g{{Tensor({3})}};
  OptimizerState s;
  s.kind          = OptimizerKind::sgd;
  s.learning_rate = 0.01;
  Tensor        *ps[] = {&p};
  EXPECT_THROW(optimizer_step(s, ps, g), ShapeError);
}

TEST(GradientCheck, SmallNetworksPass)
{
  Network lin(make_stack(3, {}, 2), 1);
  auto    x = random_batch(8, 3, 2);
  auto    y = random_labels(8, 2, 3);
  EXPECT_LT(gradient_check(lin, x, y), 1e-4);
}

TEST(GradientCheck, ZeroLossConfigurationHasNoError)
{
  auto net = single_layer(2, 2, {60, -60, -60, 60});
  auto x   = Tensor({2, 2}, {1, 0, 0, 1});
  std::vector<std::size_t> y{0, 1};
  EXPECT_LT(gradient_check(net, x, y), 1e-6);
}

TEST(GradientCheck, DoubledGradientIsDetectedAsOneThird)
{
  Network net(make_stack(4, {6}, 3), 5);
  auto    x = random_batch(6, 4, 6);
  auto    y = random_labels(6, 3, 7);
  auto    a = analytic_gradient(net, x, y);
  for (auto &t : a.tensors)
  {
    for (double &v : t.values())
    {
      v *= 2.0;
    }
  }
  double err = compare_gradients(a, numeric_gradient(net, x, y, 1e-5));
  EXPECT_NEAR(err, 1.0 / 3.0, 1e-3);
}
