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

#include "mdcc/error.hpp"
#include "mdcc/instance.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <vector>

namespace mdcc {

/// Fixed-capacity multi-class sample store. Every class holds at most
/// floor(capacity / classes) instances.
class ReferenceSet
{
public:
  ReferenceSet() = default;

  ReferenceSet(std::size_t capacity, std::uint64_t seed)
    : capacity_(capacity)
    , seed_(seed)
  {
    if (capacity == 0)
    {
      throw ConfigError("reference_capacity", "must be positive");
    }
  }

  std::size_t capacity() const noexcept
  {
    return capacity_;
  }
  std::uint64_t seed() const noexcept
  {
    return seed_;
  }
  std::size_t class_count() const noexcept
  {
    return per_class_.size();
  }
  std::size_t quota() const noexcept
  {
    return per_class_.empty() ? capacity_ : capacity_ / per_class_.size();
  }
  std::map<ClassId, std::vector<Instance>> const &per_class() const noexcept
  {
    return per_class_;
  }
  bool contains(ClassId id) const
  {
    return per_class_.count(id) != 0;
  }

  std::size_t total() const noexcept
  {
    std::size_t n = 0;
    for (auto const &[_, v] : per_class_)
    {
      n += v.size();
    }
    return n;
  }

  /// False when instances are known only by id (a cascade loaded without
  /// its dataset).
  bool resolved() const noexcept
  {
    for (auto const &[_, v] : per_class_)
    {
      for (auto const &inst : v)
      {
        if (inst.features.empty())
        {
          return false;
        }
      }
    }
    return true;
  }

  /// Flattened instances, class by class.
  std::vector<Instance> instances() const
  {
    std::vector<Instance> out;
    for (auto const &[_, v] : per_class_)
    {
      out.insert(out.end(), v.begin(), v.end());
    }
    return out;
  }

  /// Adds a class (instances are relabelled to `id`) and downsamples every
  /// class to the new quota, uniformly at random.
  void add_class(ClassId id, std::vector<Instance> instances)
  {
    if (contains(id))
    {
      throw Error("class " + std::to_string(id) + " is already in the reference set");
    }
    for (auto &inst : instances)
    {
      inst.label = id;
    }
    per_class_.emplace(id, std::move(instances));
    std::size_t const q = capacity_ / per_class_.size();

    std::mt19937_64 rng(seed_ + 0x9e3779b97f4a7c15ULL * (++rebalances_));
    for (auto &[cls, members] : per_class_)
    {
      if (members.size() <= q)
      {
        continue;
      }
      std::vector<std::size_t> order(members.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::shuffle(order.begin(), order.end(), rng);
      order.resize(q);
      std::sort(order.begin(), order.end());
      std::vector<Instance> kept;
      kept.reserve(q);
      for (auto i : order)
      {
        kept.push_back(std::move(members[i]));
      }
      members = std::move(kept);
    }
  }

  std::uint64_t rebalance_count() const noexcept
  {
    return rebalances_;
  }

  /// Restores a stored state verbatim (deserialization).
  static ReferenceSet restore(std::size_t capacity, std::uint64_t seed, std::uint64_t rebalances,
                              std::map<ClassId, std::vector<Instance>> per_class)
  {
    ReferenceSet r(capacity, seed);
    r.rebalances_ = rebalances;
    r.per_class_  = std::move(per_class);
    return r;
  }

private:
  std::size_t                              capacity_{1};
  std::uint64_t                            seed_{0};
  std::uint64_t                            rebalances_{0};
  std::map<ClassId, std::vector<Instance>> per_class_;
};

inline ReferenceSet rebalance_reference_set(ReferenceSet ref, ClassId new_class, std::vector<Instance> instances)
{
  ref.add_class(new_class, std::move(instances));
  return ref;
}

}  // namespace mdcc
