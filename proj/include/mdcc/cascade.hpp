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

// The cascade state machine: recognition over root + ordered leaves,
// buffering of unknowns by identity group, and leaf spawning.

#include "mdcc/error.hpp"
#include "mdcc/instance.hpp"
#include "mdcc/leaf.hpp"
#include "mdcc/openmax.hpp"
#include "mdcc/reference_set.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mdcc {

struct CascadeConfig
{
  /// B: a leaf is trained when a buffer holds this many instances.
  std::size_t      buffer_capacity{1000};
  leaf::LeafConfig leaf;
};

struct StageTransition
{
  std::size_t                   new_stage{};
  ClassId                       new_class{kUnknown};
  std::string                   group_id;
  std::size_t                   buffer_size{};
  std::vector<leaf::LossRecord> history;
  double                        penalty_before{};
  double                        penalty_after{};
};

struct IngestResult
{
  ClassId                        prediction{kUnknown};
  std::optional<StageTransition> transition;
};

class Cascade
{
public:
  Cascade() = default;

  Cascade(root::RootModel root, ReferenceSet reference, CascadeConfig config)
    : root_(std::move(root))
    , reference_(std::move(reference))
    , config_(std::move(config))
    , known_(root_.class_labels)
  {
    if (!root_.calibrated())
    {
      throw StateError("cascade root must be calibrated");
    }
    if (config_.buffer_capacity < 2)
    {
      throw ConfigError("buffer_capacity", "must be at least 2");
    }
  }

  /// Seeds the reference set with the root's training instances.
  static Cascade from_root(root::RootModel root, std::span<Instance const> root_train, std::size_t reference_capacity,
                           std::uint64_t reference_seed, CascadeConfig config)
  {
    ReferenceSet ref(reference_capacity, reference_seed);
    for (ClassId cls : root.class_labels)
    {
      std::vector<Instance> members;
      for (auto const &inst : root_train)
      {
        if (inst.label && *inst.label == cls)
        {
          members.push_back(inst);
        }
      }
      ref.add_class(cls, std::move(members));
    }
    return Cascade(std::move(root), std::move(ref), std::move(config));
  }

  /// Restores every field verbatim (deserialization).
  static Cascade restore(root::RootModel root, std::vector<leaf::LeafModel> leaves, ReferenceSet reference,
                         std::map<std::string, leaf::Buffer> buffers, std::vector<ClassId> known,
                         CascadeConfig config)
  {
    Cascade c(std::move(root), std::move(reference), std::move(config));
    c.leaves_  = std::move(leaves);
    c.buffers_ = std::move(buffers);
    c.known_   = std::move(known);
    if (c.known_.size() != c.root_.class_labels.size() + c.leaves_.size())
    {
      throw ParseError("known class list does not match root classes plus leaves");
    }
    return c;
  }

  std::size_t stage() const noexcept
  {
    return leaves_.size();
  }
  root::RootModel const &root() const noexcept
  {
    return root_;
  }
  std::vector<leaf::LeafModel> const &leaves() const noexcept
  {
    return leaves_;
  }
  ReferenceSet const &reference_set() const noexcept
  {
    return reference_;
  }
  std::map<std::string, leaf::Buffer> const &buffers() const noexcept
  {
    return buffers_;
  }
  std::vector<ClassId> const &known_classes() const noexcept
  {
    return known_;
  }
  CascadeConfig const &config() const noexcept
  {
    return config_;
  }
  std::size_t feature_dim() const
  {
    return root_.network.input_dim();
  }

  /// Root first, then leaves in creation order; first acceptance wins.
  ClassId recognize(std::span<double const> features) const
  {
    if (features.size() != feature_dim())
    {
      throw ShapeError("instance has " + std::to_string(features.size()) + " features, cascade expects " +
                       std::to_string(feature_dim()));
    }
    if (auto accepted = root::root_decide(root_, features))
    {
      return *accepted;
    }
    for (auto const &leaf : leaves_)
    {
      if (auto accepted = leaf::leaf_decide(leaf, features))
      {
        return *accepted;
      }
    }
    return kUnknown;
  }

  /// Recognizes `x`; unknowns are buffered by group and a full buffer spawns a
  /// new leaf. On a training failure the cascade is left untouched.
  IngestResult ingest(Instance const &x)
  {
    IngestResult out;
    out.prediction = recognize(x.features);
    if (out.prediction != kUnknown)
    {
      return out;
    }
    auto it = buffers_.find(x.group_id);
    if (it == buffers_.end())
    {
      leaf::Buffer fresh;
      fresh.group_id = x.group_id;
      fresh.capacity = config_.buffer_capacity;
      it             = buffers_.emplace(x.group_id, std::move(fresh)).first;
    }
    it->second.instances.push_back(x);
    if (it->second.full())
    {
      try
      {
        out.transition = spawn_leaf(x.group_id);
      }
      catch (...)
      {
        it->second.instances.pop_back();
        if (it->second.instances.empty())
        {
          buffers_.erase(it);
        }
        throw;
      }
    }
    return out;
  }

  /// Trains a leaf from a partially filled buffer.
  StageTransition flush(std::string const &group_id)
  {
    if (buffers_.count(group_id) == 0)
    {
      throw Error("no buffer for group '" + group_id + "'");
    }
    return spawn_leaf(group_id);
  }

  ClassId next_class_id() const
  {
    return known_.empty() ? 1 : *std::max_element(known_.begin(), known_.end()) + 1;
  }

private:
  StageTransition spawn_leaf(std::string const &group_id)
  {
    leaf::Buffer const &buffer = buffers_.at(group_id);
    if (reference_.total() == 0 || !reference_.resolved())
    {
      throw StateError("reference set has no resolved features; reload the cascade with its dataset");
    }
    ClassId const    new_class = next_class_id();
    leaf::LeafConfig cfg       = config_.leaf;
    cfg.seed                   = config_.leaf.seed + 7919ULL * (leaves_.size() + 1);

    // everything below is computed on copies and committed at the end
    auto const   reference = reference_.instances();
    auto         trained   = leaf::train_leaf(buffer.instances, reference, new_class, cfg);
    ReferenceSet next_ref  = rebalance_reference_set(reference_, new_class, buffer.instances);

    StageTransition t;
    t.new_stage      = leaves_.size() + 1;
    t.new_class      = new_class;
    t.group_id       = group_id;
    t.buffer_size    = buffer.instances.size();
    t.history        = std::move(trained.history);
    t.penalty_before = trained.penalty_before;
    t.penalty_after  = trained.penalty_after;

    leaves_.push_back(std::move(trained.model));
    known_.push_back(new_class);
    reference_ = std::move(next_ref);
    buffers_.erase(group_id);
    return t;
  }

  root::RootModel                     root_;
  std::vector<leaf::LeafModel>        leaves_;
  ReferenceSet                        reference_;
  std::map<std::string, leaf::Buffer> buffers_;
  CascadeConfig                       config_;
  std::vector<ClassId>                known_;
};

}  // namespace mdcc
