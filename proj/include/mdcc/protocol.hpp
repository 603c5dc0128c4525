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

// Staged streaming protocol: train the root on the initial classes, stream the
// remaining classes one at a time, and test on every test instance after each
// arrival.

#include "mdcc/cascade.hpp"
#include "mdcc/dataset.hpp"
#include "mdcc/error.hpp"
#include "mdcc/metrics.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <span>
#include <vector>

namespace mdcc {

struct StreamSchedule
{
  std::vector<ClassId> initial_known;
  std::vector<ClassId> arrival_order;
  std::uint64_t        interleave_seed{0};
};

/// First two train classes known, the rest arriving in ascending order.
inline StreamSchedule default_schedule(Dataset const &ds, std::uint64_t seed)
{
  auto           classes = ds.classes(Split::train);
  StreamSchedule s;
  s.interleave_seed = seed;
  for (std::size_t i = 0; i < classes.size(); ++i)
  {
    (i < 2 ? s.initial_known : s.arrival_order).push_back(classes[i]);
  }
  return s;
}

struct ProtocolConfig
{
  root::RootConfig root;
  CascadeConfig    cascade;
  std::size_t      reference_capacity{1000};
  std::uint64_t    reference_seed{3};
  /// Train a leaf from whatever an arriving class left in its buffer once its
  /// stream ends, if the buffer never reached capacity on its own.
  bool        flush_partial_buffers{true};
  std::size_t min_flush_size{2};
  /// Stop after this many arrivals (0 = all).
  std::size_t max_arrivals{0};
};

/// A test-set evaluation of a frozen cascade.
struct Evaluation
{
  std::vector<Outcome> outcomes;
  std::vector<ClassId> raw_predictions;
};

struct StageOutcome
{
  /// Cascade before the stage's class is learned (the class is still unknown).
  StageReport detection;
  /// Cascade after the stage's class stream has been ingested.
  StageReport                  recognition;
  ClassId                      arriving_class{};
  std::vector<StageTransition> transitions;
};

struct ProtocolResult
{
  std::vector<StageOutcome> stages;
  Cascade                   cascade;
  double                    root_train_accuracy{};
};

/// Maps cascade predictions back to ground-truth ids: root classes are the
/// dataset labels, leaf classes map to their buffer's majority label.
inline std::map<ClassId, ClassId> truth_mapping(Cascade const &cascade)
{
  std::map<ClassId, ClassId> m;
  for (ClassId c : cascade.root().class_labels)
  {
    m[c] = c;
  }
  for (auto const &leaf : cascade.leaves())
  {
    if (leaf.source_label)
    {
      m[leaf.class_label] = *leaf.source_label;
    }
  }
  return m;
}

/// Ground-truth classes the cascade has learned so far.
inline std::set<ClassId> learned_classes(Cascade const &cascade)
{
  std::set<ClassId> learned;
  for (auto const &[_, truth] : truth_mapping(cascade))
  {
    learned.insert(truth);
  }
  return learned;
}

inline Evaluation evaluate(Cascade const &cascade, std::span<Instance const> test)
{
  auto const mapping = truth_mapping(cascade);
  auto const learned = learned_classes(cascade);
  Evaluation ev;
  ev.outcomes.reserve(test.size());
  for (auto const &inst : test)
  {
    if (!inst.label)
    {
      throw Error("test instance '" + inst.id + "' has no label");
    }
    ClassId const raw = cascade.recognize(inst.features);
    Outcome       o;
    o.truth       = *inst.label;
    o.truth_known = learned.count(o.truth) != 0;
    if (raw == kUnknown)
    {
      o.predicted = kUnknown;
    }
    else
    {
      auto it     = mapping.find(raw);
      // leaves trained on unlabelled buffers have no ground-truth id
      o.predicted = it == mapping.end() ? -raw : it->second;
    }
    ev.raw_predictions.push_back(raw);
    ev.outcomes.push_back(o);
  }
  return ev;
}

inline void validate_schedule(Dataset const &ds, StreamSchedule const &schedule)
{
  auto const        train = ds.classes(Split::train);
  std::set<ClassId> present(train.begin(), train.end());
  std::set<ClassId> scheduled;
  if (schedule.initial_known.size() < 2)
  {
    throw ConfigError("initial_known", "needs at least two classes");
  }
  for (auto const *list : {&schedule.initial_known, &schedule.arrival_order})
  {
    for (ClassId c : *list)
    {
      if (present.count(c) == 0)
      {
        throw ConfigError("schedule", "class " + std::to_string(c) + " has no train instances");
      }
      if (!scheduled.insert(c).second)
      {
        throw ConfigError("schedule", "class " + std::to_string(c) + " is scheduled twice");
      }
    }
  }
  if (scheduled != present)
  {
    throw ConfigError("schedule", "initial_known and arrival_order must cover every train class");
  }
}

using ProtocolObserver = std::function<void(std::size_t arrivals, Cascade const &)>;

inline ProtocolResult run_protocol(Dataset const &ds, StreamSchedule const &schedule, ProtocolConfig const &cfg,
                                   ProtocolObserver const &observer = {})
{
  validate_schedule(ds, schedule);
  auto const test = ds.split(Split::test);
  if (test.empty())
  {
    throw Error("dataset has no test instances");
  }

  std::vector<Instance>                     root_train;
  std::map<ClassId, std::vector<Instance>> by_class;
  for (auto const &inst : ds.instances)
  {
    if (inst.split != Split::train || !inst.label)
    {
      continue;
    }
    by_class[*inst.label].push_back(inst);
  }
  for (ClassId c : schedule.initial_known)
  {
    root_train.insert(root_train.end(), by_class[c].begin(), by_class[c].end());
  }

  ProtocolResult result;
  auto           root_model  = root::train_root(root_train, schedule.initial_known, cfg.root);
  result.root_train_accuracy = root_model.train_accuracy;
  Cascade cascade =
      Cascade::from_root(std::move(root_model), root_train, cfg.reference_capacity, cfg.reference_seed, cfg.cascade);
  if (observer)
  {
    observer(0, cascade);
  }

  std::size_t const arrivals = cfg.max_arrivals == 0
                                   ? schedule.arrival_order.size()
                                   : std::min(cfg.max_arrivals, schedule.arrival_order.size());
  Evaluation        previous = evaluate(cascade, test);
  std::mt19937_64   rng(schedule.interleave_seed);

  for (std::size_t a = 0; a < arrivals; ++a)
  {
    StageOutcome stage;
    stage.arriving_class = schedule.arrival_order[a];
    stage.detection      = make_report(a + 1, cascade.stage(), previous.outcomes);

    auto stream = by_class[stage.arriving_class];
    std::shuffle(stream.begin(), stream.end(), rng);
    std::set<std::string> groups, spawned;
    for (auto const &inst : stream)
    {
      groups.insert(inst.group_id);
      auto r = cascade.ingest(inst);
      if (r.transition)
      {
        spawned.insert(r.transition->group_id);
        stage.transitions.push_back(std::move(*r.transition));
      }
    }
    if (cfg.flush_partial_buffers)
    {
      for (auto const &g : groups)
      {
        auto it = cascade.buffers().find(g);
        if (spawned.count(g) == 0 && it != cascade.buffers().end() &&
            it->second.instances.size() >= std::max<std::size_t>(2, cfg.min_flush_size))
        {
          stage.transitions.push_back(cascade.flush(g));
        }
      }
    }
    if (observer)
    {
      observer(a + 1, cascade);
    }

    previous          = evaluate(cascade, test);
    stage.recognition = make_report(a + 1, cascade.stage(), previous.outcomes);
    result.stages.push_back(std::move(stage));
  }
  result.cascade = std::move(cascade);
  return result;
}

/// Index of the reported stage whose known and unknown class counts are
/// closest to equal (earliest on ties).
inline std::size_t balanced_stage_index(std::vector<StageOutcome> const &stages)
{
  if (stages.empty())
  {
    throw Error("no stages to choose from");
  }
  std::size_t best = 0;
  auto        gap  = [&](std::size_t i) {
    auto const &d = stages[i].detection;
    auto const  k = static_cast<long>(d.known_classes.size());
    auto const  u = static_cast<long>(d.unknown_classes.size());
    return std::abs(k - u);
  };
  for (std::size_t i = 1; i < stages.size(); ++i)
  {
    if (gap(i) < gap(best))
    {
      best = i;
    }
  }
  return best;
}

}  // namespace mdcc
