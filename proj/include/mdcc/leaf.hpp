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

// One-class leaf node: a feature network trained with cross-entropy on the
// reference set plus a compactness penalty on the buffer, and a distance rule
// around the buffer's feature center.

#include "mdcc/distance.hpp"
#include "mdcc/error.hpp"
#include "mdcc/instance.hpp"
#include "mdcc/nn.hpp"
#include "mdcc/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mdcc::leaf {

struct Buffer
{
  std::string           group_id;
  std::vector<Instance> instances;
  std::size_t           capacity{1000};

  bool full() const noexcept
  {
    return instances.size() >= capacity;
  }
};

struct LeafConfig
{
  std::vector<std::size_t> hidden_layers{64, 32};
  nn::Activation           feature_activation{nn::Activation::identity};
  nn::OptimizerKind        optimizer{nn::OptimizerKind::adam};
  double                   learning_rate{0.002};
  std::size_t              batch_size{50};
  std::size_t              iterations{300};
  double                   beta{1.0};
  double                   theta{0.5};
  DistanceKind             distance{DistanceKind::cosine};
  std::uint64_t            seed{1};
};

struct LeafModel
{
  nn::Network  network;
  ClassId      class_label{kUnknown};
  Vector       center;
  double       rejection_line{0.0};
  double       theta{0.5};
  double       beta{1.0};
  DistanceKind distance{DistanceKind::cosine};
  /// Majority ground-truth label of the training buffer, when labels exist.
  /// Only used to score predictions; never consulted by the decision rule.
  std::optional<ClassId> source_label;
};

struct LossRecord
{
  double outer{};
  double penalty{};
  double total{};
};

struct LeafTrainingResult
{
  LeafModel               model;
  std::vector<LossRecord> history;
  double                  penalty_before{};
  double                  penalty_after{};
};

/// (1 / (n * H)) * sum_i |h_i - mean|^2
inline double self_describing_penalty(Tensor const &features)
{
  std::size_t const n = features.rows(), h = features.cols();
  if (n == 0 || h == 0)
  {
    throw ShapeError("self-describing penalty needs at least one non-empty feature vector");
  }
  Vector const mean = column_mean(features);
  double       acc  = 0.0;
  for (std::size_t r = 0; r < n; ++r)
  {
    auto row = features.row(r);
    for (std::size_t c = 0; c < h; ++c)
    {
      double const d = row[c] - mean[c];
      acc += d * d;
    }
  }
  return acc / static_cast<double>(n * h);
}

inline double self_describing_penalty(std::span<Vector const> features)
{
  return self_describing_penalty(Tensor::from_rows(features));
}

/// Gradient of the penalty w.r.t. each feature row: 2 (h_i - mean) / (n H).
inline Tensor self_describing_gradient(Tensor const &features)
{
  std::size_t const n = features.rows(), h = features.cols();
  Vector const      mean  = column_mean(features);
  double const      scale = 2.0 / static_cast<double>(n * h);
  Tensor            grad({n, h});
  for (std::size_t r = 0; r < n; ++r)
  {
    for (std::size_t c = 0; c < h; ++c)
    {
      grad(r, c) = scale * (features(r, c) - mean[c]);
    }
  }
  return grad;
}

/// Removes the ceil(theta * n) largest distances and returns the largest of
/// the rest; the minimum if nothing is left.
inline double compute_rejection_line(std::span<double const> distances, double theta)
{
  if (distances.empty())
  {
    throw Error("rejection line needs at least one distance");
  }
  if (!(theta > 0.0 && theta <= 1.0))
  {
    throw Error("theta must lie in (0, 1]");
  }
  std::vector<double> sorted(distances.begin(), distances.end());
  std::stable_sort(sorted.begin(), sorted.end());
  std::size_t const n = sorted.size();
  // tolerance keeps products such as 0.7 * 10 from rounding up past 7
  auto const raw    = std::ceil(theta * static_cast<double>(n) - 1e-9);
  auto const remove = std::max<std::size_t>(1, static_cast<std::size_t>(std::max(0.0, raw)));
  if (remove >= n)
  {
    return sorted.front();
  }
  return sorted[n - remove - 1];
}

inline Tensor features_of(nn::Network const &net, Tensor const &batch)
{
  return net.forward(batch).penultimate;
}

inline Vector compute_center(nn::Network const &net, std::span<Instance const> buffer)
{
  if (buffer.empty())
  {
    throw Error("cannot compute the center of an empty buffer");
  }
  return column_mean(features_of(net, feature_matrix(buffer)));
}

/// Distance of an instance's features to the leaf center.
inline double center_distance(LeafModel const &leaf, std::span<double const> features)
{
  Tensor h = features_of(leaf.network, single_row(features));
  return distance(leaf.distance, h.row(0), leaf.center);
}

/// Accept (class id) iff distance < rejection line. A feature vector with no
/// direction under the cosine distance is rejected.
inline std::optional<ClassId> leaf_decide(LeafModel const &leaf, std::span<double const> features)
{
  double d = 0.0;
  try
  {
    d = center_distance(leaf, features);
  }
  catch (ShapeError const &)
  {
    throw;
  }
  catch (Error const &)
  {
    return std::nullopt;
  }
  if (d >= leaf.rejection_line)
  {
    return std::nullopt;
  }
  return leaf.class_label;
}

namespace detail {

inline std::optional<ClassId> majority_label(std::span<Instance const> instances)
{
  std::map<ClassId, std::size_t> votes;
  for (auto const &inst : instances)
  {
    if (inst.label)
    {
      ++votes[*inst.label];
    }
  }
  if (votes.empty())
  {
    return std::nullopt;
  }
  auto best = std::max_element(votes.begin(), votes.end(),
                               [](auto const &a, auto const &b) { return a.second < b.second; });
  return best->first;
}

}  // namespace detail

/// Trains g_t by alternating one cross-entropy step on a reference-set
/// minibatch with one beta-scaled compactness step on a buffer minibatch.
/// Both steps share one optimizer state. With beta == 0 the compactness step
/// is skipped entirely.
inline LeafTrainingResult train_leaf(std::span<Instance const> buffer, std::span<Instance const> reference,
                                     ClassId class_label, LeafConfig const &cfg)
{
  if (buffer.size() < 2)
  {
    throw Error("leaf training needs at least two buffered instances, got " + std::to_string(buffer.size()));
  }
  if (reference.empty())
  {
    throw Error("leaf training needs a non-empty reference set");
  }
  if (!(cfg.theta > 0.0 && cfg.theta <= 1.0))
  {
    throw ConfigError("theta", "must lie in (0, 1]");
  }
  if (cfg.beta < 0.0)
  {
    throw ConfigError("beta", "must be non-negative");
  }

  std::map<ClassId, std::size_t> index;
  for (auto const &inst : reference)
  {
    if (!inst.label)
    {
      throw Error("reference instance '" + inst.id + "' has no label");
    }
    index.emplace(*inst.label, 0);
  }
  if (index.size() < 2)
  {
    throw Error("reference set must contain at least two classes");
  }
  std::size_t next = 0;
  for (auto &[cls, idx] : index)
  {
    idx = next++;
  }
  std::vector<std::size_t> ref_targets;
  for (auto const &inst : reference)
  {
    ref_targets.push_back(index.at(*inst.label));
  }
  Tensor const ref_x = feature_matrix(reference);
  Tensor const buf_x = feature_matrix(buffer);

  LeafTrainingResult result;
  LeafModel         &leaf = result.model;
  leaf.class_label        = class_label;
  leaf.theta              = cfg.theta;
  leaf.beta               = cfg.beta;
  leaf.distance           = cfg.distance;
  leaf.source_label       = detail::majority_label(buffer);
  leaf.network            = nn::Network(
      nn::make_stack(ref_x.cols(), cfg.hidden_layers, index.size(), cfg.feature_activation), cfg.seed);

  result.penalty_before = self_describing_penalty(features_of(leaf.network, buf_x));

  nn::OptimizerState opt;
  opt.kind          = cfg.optimizer;
  opt.learning_rate = cfg.learning_rate;
  MinibatchSampler ref_sampler(ref_x.rows(), cfg.batch_size, cfg.seed * 2 + 1);
  MinibatchSampler buf_sampler(buf_x.rows(), cfg.batch_size, cfg.seed * 2 + 2);
  result.history.reserve(cfg.iterations);

  for (std::size_t it = 0; it < cfg.iterations; ++it)
  {
    LossRecord rec;
    {
      auto idx     = ref_sampler.next();
      auto x       = gather_rows(ref_x, idx);
      auto targets = gather<std::size_t>(ref_targets, idx);
      auto tape    = leaf.network.record(x);
      auto ce      = nn::cross_entropy(tape.logits, targets);
      rec.outer    = ce.loss;
      nn::optimizer_step(opt, leaf.network, nn::backward(leaf.network, tape, ce.grad));
    }
    if (cfg.beta > 0.0)
    {
      auto   idx   = buf_sampler.next();
      auto   x     = gather_rows(buf_x, idx);
      auto   tape  = leaf.network.record(x);
      Tensor grad  = self_describing_gradient(tape.penultimate());
      rec.penalty  = self_describing_penalty(tape.penultimate());
      for (double &g : grad.values())
      {
        g *= cfg.beta;
      }
      nn::optimizer_step(opt, leaf.network, nn::backward(leaf.network, tape, Tensor{}, grad));
    }
    rec.total = rec.outer + cfg.beta * rec.penalty;
    result.history.push_back(rec);
  }

  Tensor const h        = features_of(leaf.network, buf_x);
  result.penalty_after  = self_describing_penalty(h);
  leaf.center           = column_mean(h);
  std::vector<double> distances;
  distances.reserve(h.rows());
  for (std::size_t r = 0; r < h.rows(); ++r)
  {
    distances.push_back(distance(leaf.distance, h.row(r), leaf.center));
  }
  leaf.rejection_line = compute_rejection_line(distances, cfg.theta);
  return result;
}

}  // namespace mdcc::leaf
