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
#pragma once

// Shared fixtures and independent oracles for the test suites. Oracles are
// written from the definitions with plain loops and never call the library
// routine they check.

#include "mdcc/mdcc.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <vector>

namespace mdcc::fixture {

inline Dataset small_synth(std::size_t classes, std::size_t dim, double sep, std::size_t train, std::size_t test,
                           std::uint64_t seed)
{
  SynthSpec s;
  s.num_classes     = classes;
  s.dim             = dim;
  s.separation      = sep;
  s.per_class_train = train;
  s.per_class_test  = test;
  s.seed            = seed;
  return synth_generate(s);
}

inline std::vector<Instance> of_classes(Dataset const &ds, Split split, std::vector<ClassId> const &classes)
{
  std::vector<Instance> out;
  for (auto const &inst : ds.instances)
  {
    if (inst.split == split && inst.label &&
        std::find(classes.begin(), classes.end(), *inst.label) != classes.end())
    {
      out.push_back(inst);
    }
  }
  return out;
}

inline root::RootConfig fast_root_config()
{
  root::RootConfig c;
  c.iterations = 400;
  return c;
}

inline leaf::LeafConfig fast_leaf_config()
{
  leaf::LeafConfig c;
  c.iterations = 150;
  c.theta      = 0.1;
  c.beta       = 0.01;
  return c;
}

/// Mean cross-entropy computed with explicit loops over raw layer parameters.
inline double oracle_loss(std::vector<nn::DenseLayer> const &layers, Tensor const &x,
                          std::vector<std::size_t> const &labels)
{
  double total = 0.0;
  for (std::size_t r = 0; r < x.rows(); ++r)
  {
    std::vector<double> a(x.row(r).begin(), x.row(r).end());
    for (auto const &l : layers)
    {
      std::vector<double> z(l.spec.out_dim, 0.0);
      for (std::size_t o = 0; o < l.spec.out_dim; ++o)
      {
        double s = l.bias(0, o);
        for (std::size_t i = 0; i < l.spec.in_dim; ++i)
        {
          s += a[i] * l.weight(i, o);
        }
        z[o] = l.spec.activation == nn::Activation::relu ? std::max(0.0, s) : s;
      }
      a = std::move(z);
    }
    double const m   = *std::max_element(a.begin(), a.end());
    double       sum = 0.0;
    for (double v : a)
    {
      sum += std::exp(v - m);
    }
    total += -(a[labels[r]] - m - std::log(sum));
  }
  return total / static_cast<double>(x.rows());
}

/// Central differences of `oracle_loss` w.r.t. every parameter, in
/// W0, b0, W1, b1, ... order.
inline std::vector<std::vector<double>> oracle_gradient(std::vector<nn::DenseLayer> layers, Tensor const &x,
                                                        std::vector<std::size_t> const &labels, double eps)
{
  std::vector<std::vector<double>> out;
  for (auto &l : layers)
  {
    for (Tensor *p : {&l.weight, &l.bias})
    {
      std::vector<double> g(p->size());
      for (std::size_t k = 0; k < p->size(); ++k)
      {
        double const saved = (*p)[k];
        (*p)[k]            = saved + eps;
        double const up    = oracle_loss(layers, x, labels);
        (*p)[k]            = saved - eps;
        double const down  = oracle_loss(layers, x, labels);
        (*p)[k]            = saved;
        g[k]               = (up - down) / (2 * eps);
      }
      out.push_back(std::move(g));
    }
  }
  return out;
}

/// Accuracy of assigning each test point to the nearest train-class mean.
inline double nearest_centroid_accuracy(Dataset const &ds)
{
  std::map<ClassId, std::vector<double>> sums;
  std::map<ClassId, std::size_t>         counts;
  for (auto const &inst : ds.instances)
  {
    if (inst.split != Split::train)
    {
      continue;
    }
    auto &s = sums[*inst.label];
    s.resize(inst.features.size(), 0.0);
    for (std::size_t d = 0; d < s.size(); ++d)
    {
      s[d] += inst.features[d];
    }
    ++counts[*inst.label];
  }
  for (auto &[c, s] : sums)
  {
    for (double &v : s)
    {
      v /= static_cast<double>(counts[c]);
    }
  }
  std::size_t right = 0, total = 0;
  for (auto const &inst : ds.instances)
  {
    if (inst.split != Split::test)
    {
      continue;
    }
    ClassId best   = 0;
    double  best_d = INFINITY;
    for (auto const &[c, s] : sums)
    {
      double d = 0.0;
      for (std::size_t k = 0; k < s.size(); ++k)
      {
        d += (inst.features[k] - s[k]) * (inst.features[k] - s[k]);
      }
      if (d < best_d)
      {
        best_d = d;
        best   = c;
      }
    }
    right += best == *inst.label ? 1 : 0;
    ++total;
  }
  return static_cast<double>(right) / static_cast<double>(total);
}

/// Two-pass mean: sum every column, then divide.
inline std::vector<double> oracle_mean(std::vector<std::vector<double>> const &rows)
{
  std::vector<double> m(rows.front().size(), 0.0);
  for (auto const &r : rows)
  {
    for (std::size_t d = 0; d < m.size(); ++d)
    {
      m[d] += r[d];
    }
  }
  for (double &v : m)
  {
    v /= static_cast<double>(rows.size());
  }
  return m;
}

/// Sort, drop the ceil(theta * n) largest (at least one), take the largest
/// remaining, or the smallest if none remain.
inline double oracle_rejection_line(std::vector<double> d, double theta)
{
  std::sort(d.begin(), d.end());
  long remove = static_cast<long>(std::ceil(theta * static_cast<double>(d.size()) - 1e-9));
  remove      = std::max(1L, remove);
  long keep   = static_cast<long>(d.size()) - remove;
  return keep <= 0 ? d.front() : d[static_cast<std::size_t>(keep - 1)];
}

/// Weibull sample by inverse transform.
inline std::vector<double> weibull_sample(double shape, double scale, std::size_t n, std::uint64_t seed)
{
  std::mt19937_64                        rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double>                    out(n);
  for (double &x : out)
  {
    double p = u(rng);
    while (p <= 0.0)
    {
      p = u(rng);
    }
    x = scale * std::pow(-std::log(p), 1.0 / shape);
  }
  return out;
}

/// Best log-likelihood over the 0.01 grid on [0.5, 4]^2. Sums of x^k are
/// computed once per shape so the scale sweep is cheap.
struct GridResult
{
  double best_ll{-INFINITY};
  double shape{};
  double scale{};
};

inline GridResult weibull_grid_oracle(std::vector<double> const &x)
{
  double const n       = static_cast<double>(x.size());
  double       sum_log = 0.0;
  for (double v : x)
  {
    sum_log += std::log(v);
  }
  GridResult best;
  for (int ki = 50; ki <= 400; ++ki)
  {
    double const k      = ki / 100.0;
    double       sum_pk = 0.0;
    for (double v : x)
    {
      sum_pk += std::pow(v, k);
    }
    for (int li = 50; li <= 400; ++li)
    {
      double const lam = li / 100.0;
      // sum of log[(k/lam) (x/lam)^(k-1) exp(-(x/lam)^k)]
      double const ll = n * std::log(k / lam) + (k - 1.0) * (sum_log - n * std::log(lam)) -
                        sum_pk / std::pow(lam, k);
      if (ll > best.best_ll)
      {
        best = {ll, k, lam};
      }
    }
  }
  return best;
}

}  // namespace mdcc::fixture
