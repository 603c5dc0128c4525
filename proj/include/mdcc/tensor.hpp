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
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace mdcc {

using Vector = std::vector<double>;

/// Dense row-major tensor of doubles. Almost everything in the library is a
/// rank-2 (rows x cols) matrix or a rank-1 vector.
class Tensor
{
public:
  using Shape = std::vector<std::size_t>;

  Tensor() = default;

  explicit Tensor(Shape shape)
    : shape_(std::move(shape))
    , data_(element_count(shape_), 0.0)
  {}

  Tensor(Shape shape, Vector data)
    : shape_(std::move(shape))
    , data_(std::move(data))
  {
    if (element_count(shape_) != data_.size())
    {
      throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                       " does not match shape " + shape_string(shape_));
    }
  }

  static Tensor zeros(std::size_t rows, std::size_t cols)
  {
    return Tensor({rows, cols});
  }

  /// Stacks equally sized rows into an (n x d) matrix.
  static Tensor from_rows(std::span<Vector const> rows)
  {
    if (rows.empty())
    {
      throw ShapeError("cannot build a matrix from zero rows");
    }
    std::size_t const cols = rows.front().size();
    Tensor        out({rows.size(), cols});
    for (std::size_t i = 0; i < rows.size(); ++i)
    {
      if (rows[i].size() != cols)
      {
        throw ShapeError("row " + std::to_string(i) + " has length " +
                         std::to_string(rows[i].size()) + ", expected " +
                         std::to_string(cols));
      }
      std::copy(rows[i].begin(), rows[i].end(), out.data_.begin() + static_cast<std::ptrdiff_t>(i * cols));
    }
    return out;
  }

  Shape const &shape() const noexcept
  {
    return shape_;
  }
  std::size_t rank() const noexcept
  {
    return shape_.size();
  }
  std::size_t size() const noexcept
  {
    return data_.size();
  }
  bool empty() const noexcept
  {
    return data_.empty();
  }

  std::size_t rows() const
  {
    require_rank2();
    return shape_[0];
  }
  std::size_t cols() const
  {
    require_rank2();
    return shape_[1];
  }

  double &operator()(std::size_t r, std::size_t c) noexcept
  {
    return data_[r * shape_[1] + c];
  }
  double const &operator()(std::size_t r, std::size_t c) const noexcept
  {
    return data_[r * shape_[1] + c];
  }

  double &operator[](std::size_t i) noexcept
  {
    return data_[i];
  }
  double const &operator[](std::size_t i) const noexcept
  {
    return data_[i];
  }

  std::span<double> row(std::size_t r)
  {
    return {data_.data() + r * cols(), cols()};
  }
  std::span<double const> row(std::size_t r) const
  {
    return {data_.data() + r * cols(), cols()};
  }

  Vector row_vector(std::size_t r) const
  {
    auto s = row(r);
    return {s.begin(), s.end()};
  }

  Vector &values() noexcept
  {
    return data_;
  }
  Vector const &values() const noexcept
  {
    return data_;
  }

  bool all_finite() const noexcept
  {
    for (double v : data_)
    {
      if (!std::isfinite(v))
      {
        return false;
      }
    }
    return true;
  }

  void fill(double v)
  {
    std::fill(data_.begin(), data_.end(), v);
  }

  friend bool operator==(Tensor const &, Tensor const &) = default;

  static std::string shape_string(Shape const &shape)
  {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i)
    {
      os << (i ? "," : "") << shape[i];
    }
    os << ')';
    return os.str();
  }

private:
  static std::size_t element_count(Shape const &shape)
  {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
  }

  void require_rank2() const
  {
    if (shape_.size() != 2)
    {
      throw ShapeError("expected a rank-2 tensor, got shape " + shape_string(shape_));
    }
  }

  Shape  shape_{0};
  Vector data_;
};

}  // namespace mdcc
