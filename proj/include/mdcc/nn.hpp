#pragma once
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

// Minimal dense feed-forward network: forward/backward passes, softmax,
// cross-entropy and SGD/Adam. Everything is float64.

#include "mdcc/error.hpp"
#include "mdcc/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mdcc::nn {

enum class Activation
{
  relu,
  identity
};

inline std::string_view to_string(Activation a)
{
  return a == Activation::relu ? "relu" : "identity";
}

inline Activation activation_from_string(std::string_view name)
{
  if (name == "relu")
  {
    return Activation::relu;
  }
  if (name == "identity")
  {
    return Activation::identity;
  }
  throw ParseError("unknown activation '" + std::string(name) + "'");
}

struct LayerSpec
{
  std::size_t in_dim{};
  std::size_t out_dim{};
  Activation  activation{Activation::identity};

  friend bool operator==(LayerSpec const &, LayerSpec const &) = default;
};

/// weight is (in_dim x out_dim), bias is (1 x out_dim).
struct DenseLayer
{
  LayerSpec spec;
  Tensor    weight;
  Tensor    bias;
};

/// Builds a stack `input -> hidden[0] (relu) -> ... -> hidden[n-1] (act) -> output`.
/// The last hidden layer uses `feature_activation`; the output layer is linear.
inline std::vector<LayerSpec> make_stack(std::size_t input_dim, std::vector<std::size_t> const &hidden,
                                         std::size_t output_dim,
                                         Activation  feature_activation = Activation::relu)
{
  std::vector<LayerSpec> specs;
  std::size_t            prev = input_dim;
  for (std::size_t i = 0; i < hidden.size(); ++i)
  {
    Activation act = (i + 1 == hidden.size()) ? feature_activation : Activation::relu;
    specs.push_back({prev, hidden[i], act});
    prev = hidden[i];
  }
  specs.push_back({prev, output_dim, Activation::identity});
  return specs;
}

struct ForwardResult
{
  Tensor logits;
  /// Input to the final dense layer (equals the batch for a one-layer net).
  Tensor penultimate;
};

/// Activations recorded by `Network::record` for a subsequent `backward`.
struct Tape
{
  std::vector<Tensor> inputs;       // input to layer i
  std::vector<Tensor> preactivation;
  Tensor              logits;

  bool recorded() const noexcept
  {
    return !inputs.empty();
  }
  Tensor const &penultimate() const
  {
    return inputs.back();
  }
};

/// Parameter gradients ordered as the network's parameters: W0, b0, W1, b1, ...
struct Gradients
{
  std::vector<Tensor> tensors;

  std::size_t parameter_count() const noexcept
  {
    std::size_t n = 0;
    for (auto const &t : tensors)
    {
      n += t.size();
    }
    return n;
  }
};

namespace detail {

// out = x * w + b, x is (n x i), w is (i x o)
inline Tensor affine(Tensor const &x, Tensor const &w, Tensor const &b)
{
  std::size_t const n = x.rows(), in = w.rows(), out = w.cols();
  Tensor            y({n, out});
  for (std::size_t r = 0; r < n; ++r)
  {
    double *yr = &y(r, 0);
    for (std::size_t c = 0; c < out; ++c)
    {
      yr[c] = b[c];
    }
    for (std::size_t k = 0; k < in; ++k)
    {
      double const xv = x(r, k);
      if (xv == 0.0)
      {
        continue;
      }
      double const *wk = &w(k, 0);
      for (std::size_t c = 0; c < out; ++c)
      {
        yr[c] += xv * wk[c];
      }
    }
  }
  return y;
}

inline void apply_activation(Tensor &t, Activation a)
{
  if (a == Activation::relu)
  {
    for (double &v : t.values())
    {
      v = v > 0.0 ? v : 0.0;
    }
  }
}

}  // namespace detail

class Network
{
public:
  Network() = default;

  /// Glorot-uniform weights in [-sqrt(6/(fan_in+fan_out)), +...], zero biases.
  Network(std::vector<LayerSpec> const &specs, std::uint64_t seed)
    : seed_(seed)
  {
    validate_specs(specs);
    std::mt19937_64 rng(seed);
    for (auto const &spec : specs)
    {
      DenseLayer layer{spec, Tensor({spec.in_dim, spec.out_dim}), Tensor({1, spec.out_dim})};
      double const limit = std::sqrt(6.0 / static_cast<double>(spec.in_dim + spec.out_dim));
      std::uniform_real_distribution<double> dist(-limit, limit);
      for (double &w : layer.weight.values())
      {
        w = dist(rng);
      }
      layers_.push_back(std::move(layer));
    }
  }

  /// Adopts explicit parameters (used by deserialization and tests).
  Network(std::vector<DenseLayer> layers, std::uint64_t seed)
    : layers_(std::move(layers))
    , seed_(seed)
  {
    std::vector<LayerSpec> specs;
    for (auto const &l : layers_)
    {
      specs.push_back(l.spec);
      if (l.weight.shape() != Tensor::Shape{l.spec.in_dim, l.spec.out_dim} ||
          l.bias.shape() != Tensor::Shape{1, l.spec.out_dim})
      {
        throw ShapeError("layer parameters do not match declared dimensions " +
                         std::to_string(l.spec.in_dim) + "x" + std::to_string(l.spec.out_dim));
      }
    }
    validate_specs(specs);
  }

  std::vector<DenseLayer> const &layers() const noexcept
  {
    return layers_;
  }
  std::uint64_t seed() const noexcept
  {
    return seed_;
  }
  bool empty() const noexcept
  {
    return layers_.empty();
  }
  std::size_t input_dim() const
  {
    return layers_.front().spec.in_dim;
  }
  std::size_t output_dim() const
  {
    return layers_.back().spec.out_dim;
  }
  std::size_t feature_dim() const
  {
    return layers_.back().spec.in_dim;
  }

  std::size_t parameter_count() const noexcept
  {
    std::size_t n = 0;
    for (auto const &l : layers_)
    {
      n += l.weight.size() + l.bias.size();
    }
    return n;
  }

  std::vector<Tensor *> parameters()
  {
    std::vector<Tensor *> out;
    for (auto &l : layers_)
    {
      out.push_back(&l.weight);
      out.push_back(&l.bias);
    }
    return out;
  }

  ForwardResult forward(Tensor const &batch) const
  {
    check_input(batch);
    Tensor current = batch;
    Tensor penultimate;
    for (std::size_t i = 0; i < layers_.size(); ++i)
    {
      if (i + 1 == layers_.size())
      {
        penultimate = current;
      }
      Tensor next = detail::affine(current, layers_[i].weight, layers_[i].bias);
      detail::apply_activation(next, layers_[i].spec.activation);
      current = std::move(next);
    }
    if (!current.all_finite())
    {
      throw Error("network produced non-finite activations");
    }
    return {std::move(current), std::move(penultimate)};
  }

  /// Forward pass that keeps every intermediate needed by `backward`.
  Tape record(Tensor const &batch) const
  {
    check_input(batch);
    Tape   tape;
    Tensor current = batch;
    for (auto const &layer : layers_)
    {
      tape.inputs.push_back(current);
      Tensor pre = detail::affine(current, layer.weight, layer.bias);
      current    = pre;
      detail::apply_activation(current, layer.spec.activation);
      tape.preactivation.push_back(std::move(pre));
    }
    if (!current.all_finite())
    {
      throw Error("network produced non-finite activations");
    }
    tape.logits = std::move(current);
    return tape;
  }

private:
  static void validate_specs(std::vector<LayerSpec> const &specs)
  {
    if (specs.empty())
    {
      throw ShapeError("network needs at least one layer");
    }
    for (std::size_t i = 0; i < specs.size(); ++i)
    {
      if (specs[i].in_dim == 0 || specs[i].out_dim == 0)
      {
        throw ShapeError("layer " + std::to_string(i) + " has a zero dimension");
      }
      if (i > 0 && specs[i - 1].out_dim != specs[i].in_dim)
      {
        throw ShapeError("layer " + std::to_string(i - 1) + " outputs " +
                         std::to_string(specs[i - 1].out_dim) + " but layer " + std::to_string(i) +
                         " expects " + std::to_string(specs[i].in_dim));
      }
    }
  }

  void check_input(Tensor const &batch) const
  {
    if (layers_.empty())
    {
      throw StateError("forward on an empty network");
    }
    if (batch.rank() != 2 || batch.cols() != input_dim())
    {
      throw ShapeError("batch shape " + Tensor::shape_string(batch.shape()) +
                       " does not match network input dimension " + std::to_string(input_dim()));
    }
  }

  std::vector<DenseLayer> layers_;
  std::uint64_t           seed_{0};
};

/// Backpropagates `logits_grad` (dL/dlogits) and, optionally, a gradient on
/// the penultimate activations. Either may be empty; an empty tensor counts
/// as zero.
inline Gradients backward(Network const &net, Tape const &tape, Tensor const &logits_grad,
                          Tensor const &penultimate_grad = Tensor{})
{
  if (!tape.recorded())
  {
    throw StateError("backward called without a recorded forward pass");
  }
  auto const       &layers = net.layers();
  std::size_t const count  = layers.size();
  if (tape.inputs.size() != count)
  {
    throw StateError("tape was recorded on a different network");
  }
  std::size_t const n = tape.logits.rows();
  if (!logits_grad.empty() && logits_grad.shape() != tape.logits.shape())
  {
    throw ShapeError("upstream gradient shape " + Tensor::shape_string(logits_grad.shape()) +
                     " does not match logits " + Tensor::shape_string(tape.logits.shape()));
  }
  if (!penultimate_grad.empty() && penultimate_grad.shape() != tape.penultimate().shape())
  {
    throw ShapeError("penultimate gradient shape mismatch");
  }

  Gradients grads;
  grads.tensors.resize(2 * count);

  // gradient w.r.t. the output of layer i (after activation)
  Tensor upstream = logits_grad.empty() ? Tensor({n, net.output_dim()}) : logits_grad;
  for (std::size_t li = count; li-- > 0;)
  {
    auto const   &layer = layers[li];
    Tensor const &x     = tape.inputs[li];
    Tensor const &pre   = tape.preactivation[li];
    std::size_t const in = layer.spec.in_dim, out = layer.spec.out_dim;

    Tensor delta = upstream;
    if (layer.spec.activation == Activation::relu)
    {
      for (std::size_t k = 0; k < delta.size(); ++k)
      {
        if (pre[k] <= 0.0)
        {
          delta[k] = 0.0;
        }
      }
    }

    Tensor gw({in, out});
    Tensor gb({1, out});
    for (std::size_t r = 0; r < n; ++r)
    {
      for (std::size_t c = 0; c < out; ++c)
      {
        gb[c] += delta(r, c);
      }
      for (std::size_t k = 0; k < in; ++k)
      {
        double const xv = x(r, k);
        if (xv == 0.0)
        {
          continue;
        }
        double *gwk = &gw(k, 0);
        for (std::size_t c = 0; c < out; ++c)
        {
          gwk[c] += xv * delta(r, c);
        }
      }
    }
    grads.tensors[2 * li]     = std::move(gw);
    grads.tensors[2 * li + 1] = std::move(gb);

    if (li == 0)
    {
      break;
    }
    Tensor down({n, in});
    for (std::size_t r = 0; r < n; ++r)
    {
      for (std::size_t k = 0; k < in; ++k)
      {
        double        acc = 0.0;
        double const *wk  = &layer.weight(k, 0);
        for (std::size_t c = 0; c < out; ++c)
        {
          acc += wk[c] * delta(r, c);
        }
        down(r, k) = acc;
      }
    }
    if (li == count - 1 && !penultimate_grad.empty())
    {
      for (std::size_t k = 0; k < down.size(); ++k)
      {
        down[k] += penultimate_grad[k];
      }
    }
    upstream = std::move(down);
  }
  return grads;
}

/// Row-wise softmax; a rank-1 tensor is treated as a single row.
inline Tensor softmax(Tensor const &logits)
{
  if (!logits.all_finite())
  {
    throw Error("softmax input contains non-finite values");
  }
  Tensor      out  = logits;
  std::size_t cols = logits.rank() == 2 ? logits.cols() : logits.size();
  std::size_t rows = cols == 0 ? 0 : logits.size() / cols;
  for (std::size_t r = 0; r < rows; ++r)
  {
    double *row = out.values().data() + r * cols;
    double  mx  = *std::max_element(row, row + cols);
    double  sum = 0.0;
    for (std::size_t c = 0; c < cols; ++c)
    {
      row[c] = std::exp(row[c] - mx);
      sum += row[c];
    }
    for (std::size_t c = 0; c < cols; ++c)
    {
      row[c] /= sum;
    }
  }
  return out;
}

inline Vector softmax(std::span<double const> logits)
{
  Tensor t({logits.size()}, Vector(logits.begin(), logits.end()));
  return softmax(t).values();
}

struct LossAndGradient
{
  double loss{};
  Tensor grad;
};

/// Mean cross-entropy over the batch; grad = (softmax - onehot) / n.
inline LossAndGradient cross_entropy(Tensor const &logits, std::span<std::size_t const> labels)
{
  std::size_t const n = logits.rows(), k = logits.cols();
  if (labels.size() != n)
  {
    throw ShapeError("label count " + std::to_string(labels.size()) + " does not match batch size " +
                     std::to_string(n));
  }
  for (std::size_t label : labels)
  {
    if (label >= k)
    {
      throw Error("label " + std::to_string(label) + " out of range [0, " + std::to_string(k) + ")");
    }
  }
  Tensor probs = softmax(logits);
  double loss  = 0.0;
  for (std::size_t r = 0; r < n; ++r)
  {
    auto   row = logits.row(r);
    double mx  = *std::max_element(row.begin(), row.end());
    double lse = 0.0;
    for (double v : row)
    {
      lse += std::exp(v - mx);
    }
    loss += mx + std::log(lse) - row[labels[r]];
  }
  double const inv = 1.0 / static_cast<double>(n);
  for (std::size_t r = 0; r < n; ++r)
  {
    probs(r, labels[r]) -= 1.0;
  }
  for (double &g : probs.values())
  {
    g *= inv;
  }
  return {loss * inv, std::move(probs)};
}

enum class OptimizerKind
{
  sgd,
  adam
};

inline std::string_view to_string(OptimizerKind k)
{
  return k == OptimizerKind::sgd ? "sgd" : "adam";
}

inline OptimizerKind optimizer_from_string(std::string_view name)
{
  if (name == "sgd")
  {
    return OptimizerKind::sgd;
  }
  if (name == "adam")
  {
    return OptimizerKind::adam;
  }
  throw ParseError("unknown optimizer '" + std::string(name) + "'");
}

struct OptimizerState
{
  OptimizerKind kind{OptimizerKind::adam};
  double        learning_rate{0.001};
  double        beta1{0.9};
  double        beta2{0.999};
  double        epsilon{1e-8};
  std::uint64_t step{0};
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
};

/// Applies one update in place. Nothing is modified if any gradient is
/// non-finite or shapes disagree.
inline void optimizer_step(OptimizerState &state, std::span<Tensor *const> params, Gradients const &grads)
{
  if (grads.tensors.size() != params.size())
  {
    throw ShapeError("gradient count does not match parameter count");
  }
  for (std::size_t i = 0; i < params.size(); ++i)
  {
    if (params[i]->shape() != grads.tensors[i].shape())
    {
      throw ShapeError("gradient " + std::to_string(i) + " shape does not match its parameter");
    }
    if (!grads.tensors[i].all_finite())
    {
      throw Error("non-finite gradient in parameter tensor " + std::to_string(i));
    }
  }

  ++state.step;
  if (state.kind == OptimizerKind::sgd)
  {
    for (std::size_t i = 0; i < params.size(); ++i)
    {
      auto       &p = params[i]->values();
      auto const &g = grads.tensors[i].values();
      for (std::size_t k = 0; k < p.size(); ++k)
      {
        p[k] -= state.learning_rate * g[k];
      }
    }
    return;
  }

  if (state.first_moment.size() != params.size())
  {
    state.first_moment.clear();
    state.second_moment.clear();
    for (auto *p : params)
    {
      state.first_moment.emplace_back(p->shape());
      state.second_moment.emplace_back(p->shape());
    }
  }
  double const t   = static_cast<double>(state.step);
  double const bc1 = 1.0 - std::pow(state.beta1, t);
  double const bc2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i)
  {
    auto       &p = params[i]->values();
    auto const &g = grads.tensors[i].values();
    auto       &m = state.first_moment[i].values();
    auto       &v = state.second_moment[i].values();
    for (std::size_t k = 0; k < p.size(); ++k)
    {
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g[k];
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g[k] * g[k];
      double const mhat = m[k] / bc1;
      double const vhat = v[k] / bc2;
      p[k] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
    }
  }
}

inline void optimizer_step(OptimizerState &state, Network &net, Gradients const &grads)
{
  auto params = net.parameters();
  optimizer_step(state, params, grads);
}

// ---- gradient checking -----------------------------------------------------

/// max over parameters of |a - n| / max(1e-8, |a| + |n|)
inline double compare_gradients(Gradients const &analytic, Gradients const &numeric)
{
  if (analytic.tensors.size() != numeric.tensors.size())
  {
    throw ShapeError("gradient sets differ in length");
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.tensors.size(); ++i)
  {
    auto const &a = analytic.tensors[i].values();
    auto const &b = numeric.tensors[i].values();
    if (a.size() != b.size())
    {
      throw ShapeError("gradient tensor " + std::to_string(i) + " differs in size");
    }
    for (std::size_t k = 0; k < a.size(); ++k)
    {
      double const denom = std::max(1e-8, std::abs(a[k]) + std::abs(b[k]));
      worst              = std::max(worst, std::abs(a[k] - b[k]) / denom);
    }
  }
  return worst;
}

inline Gradients analytic_gradient(Network const &net, Tensor const &batch, std::span<std::size_t const> labels)
{
  Tape tape = net.record(batch);
  auto ce   = cross_entropy(tape.logits, labels);
  return backward(net, tape, ce.grad);
}

/// Central differences of the mean cross-entropy loss.
inline Gradients numeric_gradient(Network const &net, Tensor const &batch, std::span<std::size_t const> labels,
                                  double epsilon)
{
  Network   probe = net;
  Gradients out;
  auto      params = probe.parameters();
  for (Tensor *p : params)
  {
    Tensor g(p->shape());
    for (std::size_t k = 0; k < p->size(); ++k)
    {
      double const saved = (*p)[k];
      (*p)[k]            = saved + epsilon;
      double const up    = cross_entropy(probe.forward(batch).logits, labels).loss;
      (*p)[k]            = saved - epsilon;
      double const down  = cross_entropy(probe.forward(batch).logits, labels).loss;
      (*p)[k]            = saved;
      g[k]               = (up - down) / (2.0 * epsilon);
    }
    out.tensors.push_back(std::move(g));
  }
  return out;
}

inline double gradient_check(Network const &net, Tensor const &batch, std::span<std::size_t const> labels,
                             double epsilon = 1e-5)
{
  return compare_gradients(analytic_gradient(net, batch, labels), numeric_gradient(net, batch, labels, epsilon));
}

}  // namespace mdcc::nn
