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

#include "mdcc/tensor.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mdcc {

/// Class identifiers are positive; 0 is reserved for "unknown".
using ClassId = int;

inline constexpr ClassId kUnknown = 0;

enum class Split
{
  train,
  test
};

struct Instance
{
  std::string            id;
  Vector                 features;
  std::optional<ClassId> label;
  /// Identity-group tag. Instances sharing a group are known to be of the
  /// same class; the engine never infers this itself.
  std::string group_id;
  Split       split{Split::train};
};

/// Stacks instance features into an (n x d) matrix.
inline Tensor feature_matrix(std::span<Instance const> instances)
{
  std::vector<Vector> rows;
  rows.reserve(instances.size());
  for (auto const &inst : instances)
  {
    rows.push_back(inst.features);
  }
  return Tensor::from_rows(rows);
}

inline Tensor feature_matrix(std::span<Instance const *const> instances)
{
  std::vector<Vector> rows;
  rows.reserve(instances.size());
  for (auto const *inst : instances)
  {
    rows.push_back(inst->features);
  }
  return Tensor::from_rows(rows);
}

inline Tensor single_row(std::span<double const> features)
{
  return Tensor({1, features.size()}, Vector(features.begin(), features.end()));
}

}  // namespace mdcc
