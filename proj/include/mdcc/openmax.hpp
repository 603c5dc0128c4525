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

// Root node: a multi-class network over the initial known classes with an
// OpenMax layer that moves activation mass to a pseudo "unknown" slot using
// per-class Weibull models of the distance to each mean activation vector.

#include "mdcc/distance.hpp"
#include "mdcc/error.hpp"
#include "mdcc/evt.hpp"
#include "mdcc/instance.hpp"
#include "mdcc/nn.hpp"
#include "mdcc/training.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mdcc::root {

enum class RejectionRule
{
  /// Reject when P(unknown) >= gamma.
  unknown_probability,
  /// Reject when the unknown slot is the arg-max of the OpenMax output.
  argmax
};

inline std::string_view to_string(RejectionRule r)
{
  return r == RejectionRule::unknown_probability ? "unknown_probability" : "argmax";
}

inline RejectionRule rejection_rule_from_string(std::string_view s)
{
  if (s == "unknown_probability")
  {
    return RejectionRule::unknown_probability;
  }
  if (s == "argmax")
  {
    return RejectionRule::argmax;
  }
  throw ParseError("unknown rejection rule '" + std::string(s) + "'");
}

/// Which vector the mean activation vectors and their distances live in.
enum class ActivationSpace
{
  logits,
  penultimate
};

inline std::string_view to_string(ActivationSpace s)
{
  return s == ActivationSpace::logits ? "logits" : "penultimate";
}

inline ActivationSpace activation_space_from_string(std::string_view s)
{
  if (s == "logits")
  {
    return ActivationSpace::logits;
  }
  if (s == "penultimate")
  {
    return ActivationSpace::penultimate;
  }
  throw ParseError("unknown activation space '" + std::string(s) + "'");
}

struct RootConfig
{
  std::vector<std::size_t> hidden_layers{64};
  nn::OptimizerKind        optimizer{nn::OptimizerKind::adam};
  double                   learning_rate{0.005};
  std::size_t              batch_size{50};
  std::size_t              iterations{1500};
  std::size_t              alpha{2};
  double                   gamma{0.008};
  std::size_t              tail_size{20};
  RejectionRule            rejection_rule{RejectionRule::unknown_probability};
  ActivationSpace          activation_space{ActivationSpace::logits};
  std::uint64_t            seed{1};
};

struct RootModel
{
  nn::Network                    network;
  std::vector<ClassId>           class_labels;
  std::vector<Vector>            mavs;
  std::vector<evt::WeibullModel> weibulls;
  std::size_t                    alpha{2};
  double                         gamma{0.008};
  RejectionRule                  rejection_rule{RejectionRule::unknown_probability};
  ActivationSpace                activation_space{ActivationSpace::logits};
  double                         train_accuracy{0.0};

  std::size_t class_count() const noexcept
  {
    return class_labels.size();
  }
  bool calibrated() const noexcept
  {
    return !mavs.empty() && weibulls.size() == class_labels.size();
  }
};

namespace detail {

inline Vector const &space_vector(ActivationSpace space, Vector const &logits, Vector const &penultimate)
{
  return space == ActivationSpace::logits ? logits : penultimate;
}

struct LabelledBatch
{
  Tensor                   features;
  std::vector<std::size_t> targets;  // index into class_labels
};

inline LabelledBatch label_instances(std::span<Instance const> instances, std::vector<ClassId> const &classes)
{
  std::map<ClassId, std::size_t> index;
  for (std::size_t i = 0; i < classes.size(); ++i)
  {
    index[classes[i]] = i;
  }
  std::vector<Vector>      rows;
  std::vector<std::size_t> targets;
  for (auto const &inst : instances)
  {
    if (!inst.label)
    {
      throw Error("root training instance '" + inst.id + "' has no label");
    }
    auto it = index.find(*inst.label);
    if (it == index.end())
    {
      continue;
    }
    rows.push_back(inst.features);
    targets.push_back(it->second);
  }
  if (rows.empty())
  {
    throw Error("no training instances belong to the root classes");
  }
  return {Tensor::from_rows(rows), std::move(targets)};
}

/// Per-instance (logits, space vector, correct?) for a labelled batch.
struct Activations
{
  std::vector<Vector> logits;
  std::vector<Vector> space;
  std::vector<bool>   correct;
};

inline Activations activations(nn::Network const &net, LabelledBatch const &batch, ActivationSpace space)
{
  auto        fwd = net.forward(batch.features);
  Activations out;
  for (std::size_t r = 0; r < batch.targets.size(); ++r)
  {
    Vector logits = fwd.logits.row_vector(r);
    out.correct.push_back(argmax(logits) == batch.targets[r]);
    out.space.push_back(space == ActivationSpace::logits ? logits : fwd.penultimate.row_vector(r));
    out.logits.push_back(std::move(logits));
  }
  return out;
}

}  // namespace detail

/// Mean activation vector per class over correctly classified (plain softmax
/// arg-max) training instances.
inline std::vector<Vector> compute_mavs(nn::Network const &net, std::span<Instance const> train,
                                        std::vector<ClassId> const &classes, ActivationSpace space)
{
  auto batch = detail::label_instances(train, classes);
  auto acts  = detail::activations(net, batch, space);

  std::size_t const   dim = acts.space.front().size();
  std::vector<Vector> sums(classes.size(), Vector(dim, 0.0));
  std::vector<std::size_t> counts(classes.size(), 0);
  for (std::size_t i = 0; i < batch.targets.size(); ++i)
  {
    if (!acts.correct[i])
    {
      continue;
    }
    auto const k = batch.targets[i];
    for (std::size_t d = 0; d < dim; ++d)
    {
      sums[k][d] += acts.space[i][d];
    }
    ++counts[k];
  }
  for (std::size_t k = 0; k < classes.size(); ++k)
  {
    if (counts[k] == 0)
    {
      throw Error("class " + std::to_string(classes[k]) + " has no correctly classified training instance");
    }
    for (double &v : sums[k])
    {
      v /= static_cast<double>(counts[k]);
    }
  }
  return sums;
}

/// Fits one Weibull per class on the Euclidean distances between correctly
/// classified training activations and the class MAV.
inline std::vector<evt::WeibullModel> calibrate(RootModel const &model, std::span<Instance const> train,
                                                std::size_t tail_size)
{
  if (model.mavs.size() != model.class_labels.size())
  {
    throw StateError("calibrate requires mean activation vectors for every class");
  }
  auto batch = detail::label_instances(train, model.class_labels);
  auto acts  = detail::activations(model.network, batch, model.activation_space);

  std::vector<std::vector<double>> distances(model.class_labels.size());
  for (std::size_t i = 0; i < batch.targets.size(); ++i)
  {
    if (acts.correct[i])
    {
      auto const k = batch.targets[i];
      distances[k].push_back(euclidean_distance(acts.space[i], model.mavs[k]));
    }
  }
  std::vector<evt::WeibullModel> out;
  for (std::size_t k = 0; k < distances.size(); ++k)
  {
    if (distances[k].size() < tail_size)
    {
      throw Error("class " + std::to_string(model.class_labels[k]) + " has " +
                  std::to_string(distances[k].size()) +
                  " correctly classified instances, fewer than the tail size " + std::to_string(tail_size));
    }
    try
    {
      out.push_back(evt::fit_weibull_tail(distances[k], tail_size));
    }
    catch (Error const &e)
    {
      throw Error("class " + std::to_string(model.class_labels[k]) + ": " + e.what());
    }
  }
  return out;
}

inline RootModel train_root(std::span<Instance const> train, std::vector<ClassId> classes, RootConfig const &cfg)
{
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  if (classes.size() < 2)
  {
    throw Error("root training needs at least two classes");
  }
  if (cfg.alpha == 0 || cfg.alpha > classes.size())
  {
    throw ConfigError("alpha_root", "must be in [1, number of root classes]");
  }
  auto batch = detail::label_instances(train, classes);
  std::vector<std::size_t> counts(classes.size(), 0);
  for (auto t : batch.targets)
  {
    ++counts[t];
  }
  for (std::size_t k = 0; k < classes.size(); ++k)
  {
    if (counts[k] == 0)
    {
      throw Error("root class " + std::to_string(classes[k]) + " has no training instances");
    }
    if (counts[k] < cfg.batch_size)
    {
      throw Error("root class " + std::to_string(classes[k]) + " has " + std::to_string(counts[k]) +
                  " instances, fewer than the batch size " + std::to_string(cfg.batch_size));
    }
  }

  RootModel model;
  model.class_labels     = classes;
  model.alpha            = cfg.alpha;
  model.gamma            = cfg.gamma;
  model.rejection_rule   = cfg.rejection_rule;
  model.activation_space = cfg.activation_space;
  model.network =
      nn::Network(nn::make_stack(batch.features.cols(), cfg.hidden_layers, classes.size()), cfg.seed);

  nn::OptimizerState opt;
  opt.kind          = cfg.optimizer;
  opt.learning_rate = cfg.learning_rate;
  MinibatchSampler sampler(batch.targets.size(), cfg.batch_size, cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  for (std::size_t it = 0; it < cfg.iterations; ++it)
  {
    auto idx     = sampler.next();
    auto x       = gather_rows(batch.features, idx);
    auto targets = gather<std::size_t>(batch.targets, idx);
    auto tape    = model.network.record(x);
    auto ce      = nn::cross_entropy(tape.logits, targets);
    nn::optimizer_step(opt, model.network, nn::backward(model.network, tape, ce.grad));
  }

  auto        acts    = detail::activations(model.network, batch, model.activation_space);
  std::size_t correct = static_cast<std::size_t>(std::count(acts.correct.begin(), acts.correct.end(), true));
  model.train_accuracy = static_cast<double>(correct) / static_cast<double>(acts.correct.size());

  model.mavs     = compute_mavs(model.network, train, classes, model.activation_space);
  model.weibulls = calibrate(model, train, cfg.tail_size);
  return model;
}

struct OpenMaxScores
{
  Vector activations;  // v, final pre-softmax layer
  Vector revised;      // v-hat
  double pseudo{};     // v-hat_0
  /// softmax over [v-hat_0, v-hat_1..v-hat_K]; index 0 is "unknown".
  Vector probabilities;
  /// Weibull CDF of the distance to each class MAV.
  Vector cdf;

  double unknown_probability() const
  {
    return probabilities.front();
  }
};

/// Revises activations for the `alpha` top-ranked classes. Rank i (1-based)
/// gets weight 1 - ((alpha - i + 1) / alpha) * cdf; the mass removed from the
/// known classes becomes the pseudo-activation of the unknown slot.
inline OpenMaxScores revise_activations(Vector const &activations, Vector const &cdf, std::size_t alpha)
{
  if (activations.size() != cdf.size())
  {
    throw ShapeError("activation and CDF vectors differ in length");
  }
  std::size_t const k = activations.size();
  alpha               = std::min(alpha, k);

  std::vector<std::size_t> ranked(k);
  std::iota(ranked.begin(), ranked.end(), std::size_t{0});
  std::stable_sort(ranked.begin(), ranked.end(),
                   [&](std::size_t a, std::size_t b) { return activations[a] > activations[b]; });

  OpenMaxScores out;
  out.activations = activations;
  out.cdf         = cdf;
  out.revised     = activations;
  double const a  = static_cast<double>(alpha);
  for (std::size_t i = 0; i < alpha; ++i)
  {
    std::size_t const cls    = ranked[i];
    double const      weight = 1.0 - ((a - static_cast<double>(i)) / a) * cdf[cls];
    out.revised[cls]         = activations[cls] * weight;
  }
  out.pseudo = 0.0;
  for (std::size_t c = 0; c < k; ++c)
  {
    out.pseudo += activations[c] - out.revised[c];
  }
  Vector slots;
  slots.reserve(k + 1);
  slots.push_back(out.pseudo);
  slots.insert(slots.end(), out.revised.begin(), out.revised.end());
  out.probabilities = nn::softmax(slots);
  return out;
}

inline OpenMaxScores openmax_scores(RootModel const &model, std::span<double const> features)
{
  if (!model.calibrated())
  {
    throw StateError("openmax_scores requires a calibrated root model");
  }
  auto   fwd    = model.network.forward(single_row(features));
  Vector logits = fwd.logits.row_vector(0);
  Vector pen    = fwd.penultimate.row_vector(0);
  Vector const &space = detail::space_vector(model.activation_space, logits, pen);

  Vector cdf(model.class_count());
  for (std::size_t c = 0; c < cdf.size(); ++c)
  {
    cdf[c] = evt::weibull_cdf(model.weibulls[c], euclidean_distance(space, model.mavs[c]));
  }
  return revise_activations(logits, cdf, model.alpha);
}

/// Accepted class id, or nullopt for a rejection.
inline std::optional<ClassId> decide(RootModel const &model, OpenMaxScores const &scores)
{
  bool reject = false;
  if (model.rejection_rule == RejectionRule::unknown_probability)
  {
    reject = scores.unknown_probability() >= model.gamma;
  }
  else
  {
    reject = argmax(scores.probabilities) == 0;
  }
  if (reject)
  {
    return std::nullopt;
  }
  return model.class_labels[argmax(scores.activations)];
}

inline std::optional<ClassId> root_decide(RootModel const &model, std::span<double const> features)
{
  return decide(model, openmax_scores(model, features));
}

}  // namespace mdcc::root
