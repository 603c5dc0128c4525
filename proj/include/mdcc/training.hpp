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
#include "mdcc/nn.hpp"
#include "mdcc/tensor.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

namespace mdcc {

/// Epoch-wise shuffled minibatch indices over [0, n). Batches never straddle
/// an epoch boundary; the last batch of an epoch may be short.
class MinibatchSampler
{
public:
  MinibatchSampler(std::size_t n, std::size_t batch_size, std::uint64_t seed)
    : order_(n)
    , batch_(std::min(batch_size, n))
    , rng_(seed)
  {
    if (n == 0 || batch_size == 0)
    {
      throw Error("minibatch sampler needs a non-empty set and a positive batch size");
    }
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    std::shuffle(order_.begin(), order_.end(), rng_);
  }

  std::vector<std::size_t> next()
  {
    if (cursor_ >= order_.size())
    {
      std::shuffle(order_.begin(), order_.end(), rng_);
      cursor_ = 0;
    }
    std::size_t const end = std::min(order_.size(), cursor_ + batch_);
    std::vector<std::size_t> out(order_.begin() + static_cast<std::ptrdiff_t>(cursor_),
                                 order_.begin() + static_cast<std::ptrdiff_t>(end));
    cursor_ = end;
    return out;
  }

private:
  std::vector<std::size_t> order_;
  std::size_t              batch_;
  std::size_t              cursor_{0};
  std::mt19937_64          rng_;
};

inline Tensor gather_rows(Tensor const &m, std::span<std::size_t const> idx)
{
  std::size_t const cols = m.cols();
  Tensor            out({idx.size(), cols});
  for (std::size_t i = 0; i < idx.size(); ++i)
  {
    auto src = m.row(idx[i]);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

template <typename T>
std::vector<T> gather(std::span<T const> values, std::span<std::size_t const> idx)
{
  std::vector<T> out;
  out.reserve(idx.size());
  for (auto i : idx)
  {
    out.push_back(values[i]);
  }
  return out;
}

inline std::size_t argmax(std::span<double const> v)
{
  return static_cast<std::size_t>(std::distance(v.begin(), std::max_element(v.begin(), v.end())));
}

/// Element-wise mean of the rows of an (n x d) matrix.
inline Vector column_mean(Tensor const &m)
{
  Vector mean(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r)
  {
    auto row = m.row(r);
    for (std::size_t c = 0; c < mean.size(); ++c)
    {
      mean[c] += row[c];
    }
  }
  for (double &v : mean)
  {
    v /= static_cast<double>(m.rows());
  }
  return mean;
}

}  // namespace mdcc
