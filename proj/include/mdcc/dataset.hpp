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

// Dataset ingestion (CSV / JSON lines) and the synthetic Gaussian generator.
//
// CSV layout: header `id,split,group_id,label,f_0,...,f_{D-1}`, one instance
// per row. `label` and `group_id` may be empty; train rows need a group_id.

#include "mdcc/error.hpp"
#include "mdcc/instance.hpp"

#include <nlohmann/json.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace mdcc {

enum class DataFormat
{
  csv,
  jsonl
};

inline DataFormat data_format_from_string(std::string_view s)
{
  if (s == "csv")
  {
    return DataFormat::csv;
  }
  if (s == "jsonl")
  {
    return DataFormat::jsonl;
  }
  throw ParseError("unknown data format '" + std::string(s) + "'");
}

/// Picks the format from the file extension (.jsonl, otherwise csv).
inline DataFormat data_format_for(std::filesystem::path const &path)
{
  return path.extension() == ".jsonl" ? DataFormat::jsonl : DataFormat::csv;
}

inline std::string_view to_string(Split s)
{
  return s == Split::train ? "train" : "test";
}

struct Dataset
{
  std::vector<Instance> instances;
  std::size_t           feature_dim{0};

  std::vector<Instance> split(Split which) const
  {
    std::vector<Instance> out;
    for (auto const &inst : instances)
    {
      if (inst.split == which)
      {
        out.push_back(inst);
      }
    }
    return out;
  }

  /// Sorted distinct labels present in the given split.
  std::vector<ClassId> classes(Split which) const
  {
    std::set<ClassId> seen;
    for (auto const &inst : instances)
    {
      if (inst.split == which && inst.label)
      {
        seen.insert(*inst.label);
      }
    }
    return {seen.begin(), seen.end()};
  }

  Instance const *find(std::string const &id) const
  {
    if (index_.size() != instances.size())
    {
      index_.clear();
      for (std::size_t i = 0; i < instances.size(); ++i)
      {
        index_.emplace(instances[i].id, i);
      }
    }
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &instances[it->second];
  }

  /// Checks the dataset invariants: uniform dimension, unique ids, group ids
  /// on every train instance.
  void validate() const
  {
    std::set<std::string> ids;
    for (auto const &inst : instances)
    {
      if (inst.features.size() != feature_dim)
      {
        throw ParseError("instance '" + inst.id + "' has " + std::to_string(inst.features.size()) +
                         " features, expected " + std::to_string(feature_dim));
      }
      if (!ids.insert(inst.id).second)
      {
        throw ParseError("duplicate instance id '" + inst.id + "'");
      }
      if (inst.split == Split::train && inst.group_id.empty())
      {
        throw ParseError("train instance '" + inst.id + "' has no group_id");
      }
    }
  }

private:
  mutable std::map<std::string, std::size_t> index_;
};

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line)
{
  std::vector<std::string_view> out;
  std::size_t                   start = 0;
  while (true)
  {
    auto pos = line.find(',', start);
    if (pos == std::string_view::npos)
    {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline double parse_double(std::string_view s, std::string const &where)
{
  double v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty() || !std::isfinite(v))
  {
    throw ParseError(where + ": '" + std::string(s) + "' is not a finite number");
  }
  return v;
}

inline ClassId parse_label(std::string_view s, std::string const &where)
{
  ClassId v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || v <= 0)
  {
    throw ParseError(where + ": label '" + std::string(s) + "' must be a positive integer");
  }
  return v;
}

inline Split parse_split(std::string_view s, std::string const &where)
{
  if (s == "train")
  {
    return Split::train;
  }
  if (s == "test")
  {
    return Split::test;
  }
  throw ParseError(where + ": split must be 'train' or 'test', got '" + std::string(s) + "'");
}

inline std::string format_double(double v)
{
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace detail

inline Dataset load_csv(std::istream &in)
{
  std::string header;
  if (!std::getline(in, header))
  {
    throw ParseError("line 1: missing CSV header");
  }
  if (!header.empty() && header.back() == '\r')
  {
    header.pop_back();
  }
  auto const cols = detail::split_fields(header);
  if (cols.size() < 5 || cols[0] != "id" || cols[1] != "split" || cols[2] != "group_id" || cols[3] != "label")
  {
    throw ParseError("line 1: header must start with id,split,group_id,label,f_0");
  }
  for (std::size_t i = 4; i < cols.size(); ++i)
  {
    if (cols[i] != "f_" + std::to_string(i - 4))
    {
      throw ParseError("line 1: expected column f_" + std::to_string(i - 4) + ", got '" + std::string(cols[i]) +
                       "'");
    }
  }

  Dataset ds;
  ds.feature_dim = cols.size() - 4;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line))
  {
    ++lineno;
    if (!line.empty() && line.back() == '\r')
    {
      line.pop_back();
    }
    if (line.empty())
    {
      continue;
    }
    std::string const where  = "line " + std::to_string(lineno);
    auto const        fields = detail::split_fields(line);
    if (fields.size() != cols.size())
    {
      throw ParseError(where + ": expected " + std::to_string(cols.size()) + " fields, got " +
                       std::to_string(fields.size()));
    }
    Instance inst;
    inst.id = std::string(fields[0]);
    if (inst.id.empty())
    {
      throw ParseError(where + ": empty id");
    }
    inst.split    = detail::parse_split(fields[1], where);
    inst.group_id = std::string(fields[2]);
    if (!fields[3].empty())
    {
      inst.label = detail::parse_label(fields[3], where);
    }
    inst.features.reserve(ds.feature_dim);
    for (std::size_t i = 4; i < fields.size(); ++i)
    {
      inst.features.push_back(detail::parse_double(fields[i], where + ", column " + std::string(cols[i])));
    }
    if (inst.split == Split::train && inst.group_id.empty())
    {
      throw ParseError(where + ": train instance needs a group_id");
    }
    ds.instances.push_back(std::move(inst));
  }
  ds.validate();
  return ds;
}

inline Dataset load_jsonl(std::istream &in)
{
  Dataset     ds;
  bool        have_dim = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line))
  {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos)
    {
      continue;
    }
    std::string const where = "line " + std::to_string(lineno);
    try
    {
      auto const j = nlohmann::json::parse(line);
      Instance   inst;
      inst.id       = j.at("id").get<std::string>();
      inst.split    = detail::parse_split(j.at("split").get<std::string>(), where);
      inst.group_id = j.value("group_id", std::string{});
      if (j.contains("label") && !j.at("label").is_null())
      {
        inst.label = j.at("label").get<ClassId>();
        if (*inst.label <= 0)
        {
          throw ParseError(where + ": label must be a positive integer");
        }
      }
      inst.features = j.at("features").get<Vector>();
      if (!have_dim)
      {
        ds.feature_dim = inst.features.size();
        have_dim       = true;
      }
      else if (inst.features.size() != ds.feature_dim)
      {
        throw ParseError(where + ": expected " + std::to_string(ds.feature_dim) + " features, got " +
                         std::to_string(inst.features.size()));
      }
      if (inst.split == Split::train && inst.group_id.empty())
      {
        throw ParseError(where + ": train instance needs a group_id");
      }
      ds.instances.push_back(std::move(inst));
    }
    catch (nlohmann::json::exception const &e)
    {
      throw ParseError(where + ": " + e.what());
    }
  }
  ds.validate();
  return ds;
}

inline Dataset load_dataset(std::filesystem::path const &path, DataFormat format)
{
  std::ifstream in(path);
  if (!in)
  {
    throw Error("cannot open dataset '" + path.string() + "'");
  }
  try
  {
    return format == DataFormat::csv ? load_csv(in) : load_jsonl(in);
  }
  catch (ParseError const &e)
  {
    throw ParseError(path.string() + ": " + e.what());
  }
}

inline Dataset load_dataset(std::filesystem::path const &path)
{
  return load_dataset(path, data_format_for(path));
}

inline void save_csv(Dataset const &ds, std::ostream &out)
{
  out << "id,split,group_id,label";
  for (std::size_t i = 0; i < ds.feature_dim; ++i)
  {
    out << ",f_" << i;
  }
  out << '\n';
  for (auto const &inst : ds.instances)
  {
    out << inst.id << ',' << to_string(inst.split) << ',' << inst.group_id << ',';
    if (inst.label)
    {
      out << *inst.label;
    }
    for (double v : inst.features)
    {
      out << ',' << detail::format_double(v);
    }
    out << '\n';
  }
}

inline void save_jsonl(Dataset const &ds, std::ostream &out)
{
  for (auto const &inst : ds.instances)
  {
    nlohmann::ordered_json j;
    j["id"]       = inst.id;
    j["split"]    = to_string(inst.split);
    j["group_id"] = inst.group_id;
    j["label"]    = inst.label ? nlohmann::ordered_json(*inst.label) : nlohmann::ordered_json(nullptr);
    j["features"] = inst.features;
    out << j.dump() << '\n';
  }
}

inline void save_dataset(Dataset const &ds, std::filesystem::path const &path, DataFormat format)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
  {
    throw Error("cannot write dataset '" + path.string() + "'");
  }
  format == DataFormat::csv ? save_csv(ds, out) : save_jsonl(ds, out);
  if (!out)
  {
    throw Error("failed writing dataset '" + path.string() + "'");
  }
}

// ---- synthetic data --------------------------------------------------------

struct SynthSpec
{
  std::size_t   num_classes{8};
  std::size_t   dim{16};
  double        separation{6.0};
  std::size_t   per_class_train{200};
  std::size_t   per_class_test{200};
  std::uint64_t seed{7};
};

/// Unit-variance isotropic Gaussian clusters, one per class (labels 1..K),
/// with pairwise center distance >= separation. Train instances of class k
/// carry group_id "k".
inline Dataset synth_generate(SynthSpec const &spec)
{
  if (!(spec.separation > 0.0))
  {
    throw ConfigError("separation", "must be positive");
  }
  if (spec.num_classes == 0 || spec.dim == 0)
  {
    throw ConfigError("classes", "need at least one class and one dimension");
  }
  std::mt19937_64                  rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Centers ~ N(0, s^2 I) with s chosen so the typical pairwise distance is
  // 1.5x the required separation; draws that violate it are resampled.
  double const s = 1.5 * spec.separation / std::sqrt(2.0 * static_cast<double>(spec.dim));
  std::vector<Vector> centers;
  constexpr int       kDrawsPerCenter = 10000;
  for (std::size_t k = 0; k < spec.num_classes; ++k)
  {
    bool placed = false;
    for (int attempt = 0; attempt < kDrawsPerCenter && !placed; ++attempt)
    {
      Vector c(spec.dim);
      for (double &v : c)
      {
        v = s * normal(rng);
      }
      placed = std::all_of(centers.begin(), centers.end(), [&](Vector const &o) {
        double d2 = 0.0;
        for (std::size_t i = 0; i < spec.dim; ++i)
        {
          d2 += (c[i] - o[i]) * (c[i] - o[i]);
        }
        return std::sqrt(d2) >= spec.separation;
      });
      if (placed)
      {
        centers.push_back(std::move(c));
      }
    }
    if (!placed)
    {
      throw Error("could not place " + std::to_string(spec.num_classes) + " centers " +
                  std::to_string(spec.separation) + " apart in " + std::to_string(spec.dim) + " dimensions");
    }
  }

  Dataset ds;
  ds.feature_dim = spec.dim;
  auto emit      = [&](std::size_t k, Split split, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i)
    {
      Instance inst;
      inst.id       = "c" + std::to_string(k + 1) + "-" + std::string(to_string(split)) + "-" + std::to_string(i);
      inst.split    = split;
      inst.label    = static_cast<ClassId>(k + 1);
      inst.group_id = split == Split::train ? std::to_string(k + 1) : std::string{};
      inst.features.resize(spec.dim);
      for (std::size_t d = 0; d < spec.dim; ++d)
      {
        inst.features[d] = centers[k][d] + normal(rng);
      }
      ds.instances.push_back(std::move(inst));
    }
  };
  for (std::size_t k = 0; k < spec.num_classes; ++k)
  {
    emit(k, Split::train, spec.per_class_train);
    emit(k, Split::test, spec.per_class_test);
  }
  return ds;
}

}  // namespace mdcc
