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

// Two-parameter Weibull tail fitting for extreme-value calibration.

#include "mdcc/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mdcc::evt {

struct WeibullModel
{
  double      shape{1.0};  // kappa
  double      scale{1.0};  // lambda
  std::size_t tail_size{0};
  double      translation{0.0};

  friend bool operator==(WeibullModel const &, WeibullModel const &) = default;
};

/// 0 for x <= translation, else 1 - exp(-((x - tau) / lambda)^kappa).
inline double weibull_cdf(WeibullModel const &m, double x)
{
  if (!(x > m.translation))
  {
    return 0.0;
  }
  double const z = (x - m.translation) / m.scale;
  return -std::expm1(-std::pow(z, m.shape));
}

inline double weibull_log_density(WeibullModel const &m, double x)
{
  if (!(x > m.translation))
  {
    throw Error("sample " + std::to_string(x) + " is not above the Weibull translation");
  }
  double const z = (x - m.translation) / m.scale;
  return std::log(m.shape / m.scale) + (m.shape - 1.0) * std::log(z) - std::pow(z, m.shape);
}

inline double weibull_log_likelihood(WeibullModel const &m, std::span<double const> samples)
{
  double ll = 0.0;
  for (double x : samples)
  {
    ll += weibull_log_density(m, x);
  }
  return ll;
}

/// Closed-form scale MLE for a fixed shape: lambda = (mean x^kappa)^(1/kappa).
inline double fit_weibull_scale(std::span<double const> samples, double shape)
{
  if (samples.empty())
  {
    throw Error("cannot fit a Weibull scale to zero samples");
  }
  double sum = 0.0;
  for (double x : samples)
  {
    sum += std::pow(x, shape);
  }
  return std::pow(sum / static_cast<double>(samples.size()), 1.0 / shape);
}

namespace detail {

// Profile score for the shape on data normalised to max 1:
//   g(k) = sum x^k ln x / sum x^k - 1/k - mean(ln x)
// g is strictly increasing in k, so its root is the shape MLE.
struct ProfileScore
{
  std::span<double const> logs;
  double                  mean_log{};

  // returns (g, g')
  std::pair<double, double> operator()(double k) const
  {
    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (double l : logs)
    {
      double const w = std::exp(k * l);
      s0 += w;
      s1 += w * l;
      s2 += w * l * l;
    }
    double const ratio = s1 / s0;
    double const g     = ratio - 1.0 / k - mean_log;
    double const dg    = s2 / s0 - ratio * ratio + 1.0 / (k * k);
    return {g, dg};
  }
};

}  // namespace detail

/// Maximum-likelihood Weibull fit on the `tail_size` largest samples, with the
/// translation fixed at 0. Newton on the shape profile equation, falling back
/// to bisection whenever a step leaves the bracket.
inline WeibullModel fit_weibull_tail(std::span<double const> samples, std::size_t tail_size)
{
  if (tail_size < 2)
  {
    throw Error("Weibull tail size must be at least 2");
  }
  if (tail_size > samples.size())
  {
    throw Error("Weibull tail size " + std::to_string(tail_size) + " exceeds sample count " +
                std::to_string(samples.size()));
  }
  std::vector<double> tail(samples.begin(), samples.end());
  std::partial_sort(tail.begin(), tail.begin() + static_cast<std::ptrdiff_t>(tail_size), tail.end(),
                    std::greater<>{});
  tail.resize(tail_size);

  double const hi_val = tail.front();
  double const lo_val = tail.back();
  if (!(lo_val > 0.0) || !std::isfinite(hi_val))
  {
    throw Error("Weibull tail must contain finite positive values");
  }
  if (hi_val == lo_val)
  {
    throw Error("degenerate Weibull tail: all " + std::to_string(tail_size) + " values equal " +
                std::to_string(hi_val));
  }

  std::vector<double> logs;
  logs.reserve(tail.size());
  double mean_log = 0.0;
  for (double x : tail)
  {
    logs.push_back(std::log(x / hi_val));
    mean_log += logs.back();
  }
  mean_log /= static_cast<double>(logs.size());
  detail::ProfileScore score{logs, mean_log};

  // g(k) -> -inf as k -> 0+, and g(k) -> -mean_log > 0 as k -> inf.
  double lo = 1e-3, hi = 1.0;
  while (score(lo).first > 0.0 && lo > 1e-12)
  {
    lo *= 0.1;
  }
  while (score(hi).first < 0.0)
  {
    hi *= 2.0;
    if (hi > 1e6)
    {
      throw Error("Weibull shape did not bracket; tail is nearly degenerate");
    }
  }

  double k = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter)
  {
    auto [g, dg] = score(k);
    if (g == 0.0)
    {
      break;
    }
    if (g < 0.0)
    {
      lo = k;
    }
    else
    {
      hi = k;
    }
    double next = k - g / dg;
    if (!(next > lo && next < hi) || !std::isfinite(next))
    {
      next = 0.5 * (lo + hi);
    }
    bool const done = std::abs(next - k) < 1e-10;
    k               = next;
    if (done)
    {
      break;
    }
  }

  double sum = 0.0;
  for (double l : logs)
  {
    sum += std::exp(k * l);
  }
  double const scale = hi_val * std::pow(sum / static_cast<double>(logs.size()), 1.0 / k);
  return {k, scale, tail_size, 0.0};
}

}  // namespace mdcc::evt
