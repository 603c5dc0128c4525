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

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <string_view>

namespace mdcc {

enum class DistanceKind
{
  cosine,
  euclidean
};

inline std::string_view to_string(DistanceKind k)
{
  return k == DistanceKind::cosine ? "cosine" : "euclidean";
}

inline DistanceKind distance_from_string(std::string_view name)
{
  if (name == "cosine")
  {
    return DistanceKind::cosine;
  }
  if (name == "euclidean")
  {
    return DistanceKind::euclidean;
  }
  throw ParseError("unknown distance kind '" + std::string(name) + "'");
}

namespace detail {
inline void require_same_length(std::span<double const> u, std::span<double const> v)
{
  if (u.size() != v.size())
  {
    throw ShapeError("vectors of length " + std::to_string(u.size()) + " and " + std::to_string(v.size()));
  }
}
}  // namespace detail

inline double euclidean_distance(std::span<double const> u, std::span<double const> v)
{
  detail::require_same_length(u, v);
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
  {
    double const d = u[i] - v[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

/// 1 - cos(u, v), in [0, 2]. Zero vectors have no direction and are rejected.
inline double cosine_distance(std::span<double const> u, std::span<double const> v)
{
  detail::require_same_length(u, v);
  double dot = 0.0, nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i)
  {
    dot += u[i] * v[i];
    nu += u[i] * u[i];
    nv += v[i] * v[i];
  }
  if (nu == 0.0 || nv == 0.0)
  {
    throw Error("cosine distance is undefined for a zero vector");
  }
  double const c = dot / (std::sqrt(nu) * std::sqrt(nv));
  return std::clamp(1.0 - c, 0.0, 2.0);
}

inline double distance(DistanceKind kind, std::span<double const> u, std::span<double const> v)
{
  return kind == DistanceKind::cosine ? cosine_distance(u, v) : euclidean_distance(u, v);
}

}  // namespace mdcc
