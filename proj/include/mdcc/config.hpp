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

// Run configuration: a flat JSON object with defaults, field-level
// validation, named presets and MDCC_* environment overrides.

#include "mdcc/dataset.hpp"
#include "mdcc/error.hpp"
#include "mdcc/protocol.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

namespace mdcc {

using Json = nlohmann::ordered_json;

struct RunConfig
{
  double                   lr_root{0.005};
  double                   lr_leaf{0.002};
  std::size_t              batch_size{50};
  std::size_t              alpha_root{2};
  double                   gamma_root{0.008};
  double                   theta{0.5};
  double                   beta{1.0};
  std::size_t              F{1000};
  std::size_t              B{1000};
  std::size_t              eta_tail{20};
  std::size_t              iterations_root{1500};
  std::size_t              iterations_leaf{300};
  std::vector<std::size_t> root_hidden{64};
  std::vector<std::size_t> leaf_hidden{64, 32};
  nn::Activation           leaf_feature_activation{nn::Activation::identity};
  nn::OptimizerKind        optimizer{nn::OptimizerKind::adam};
  DistanceKind             distance_kind{DistanceKind::cosine};
  root::RejectionRule      rejection_rule{root::RejectionRule::unknown_probability};
  root::ActivationSpace    activation_space{root::ActivationSpace::logits};
  /// Root, leaf, reference-set and stream seeds are seed, seed+1, seed+2, seed+3.
  std::uint64_t seed{1};
  /// Empty lists mean: first two train classes known, the rest arriving in
  /// ascending order.
  std::vector<ClassId> initial_known;
  std::vector<ClassId> arrival_order;
  bool                 flush_partial_buffers{true};

  friend bool operator==(RunConfig const &, RunConfig const &) = default;
};

namespace detail {

template <class T>
T json_get(Json const &j, std::string const &key)
{
  try
  {
    return j.get<T>();
  }
  catch (nlohmann::json::exception const &)
  {
    throw ConfigError(key, "has the wrong type (" + std::string(j.type_name()) + ")");
  }
}

inline std::size_t json_count(Json const &j, std::string const &key)
{
  if (!j.is_number_integer() || (!j.is_number_unsigned() && j.get<long long>() < 0))
  {
    throw ConfigError(key, "must be a non-negative integer");
  }
  return j.get<std::size_t>();
}

inline double json_real(Json const &j, std::string const &key)
{
  if (!j.is_number())
  {
    throw ConfigError(key, "must be a number");
  }
  return j.get<double>();
}

template <class F>
auto parse_enum(Json const &j, std::string const &key, F &&from_string)
{
  auto const name = json_get<std::string>(j, key);
  try
  {
    return from_string(name);
  }
  catch (Error const &e)
  {
    throw ConfigError(key, e.what());
  }
}

}  // namespace detail

inline Json to_json(RunConfig const &c)
{
  Json j;
  j["lr_root"]                 = c.lr_root;
  j["lr_leaf"]                 = c.lr_leaf;
  j["batch_size"]              = c.batch_size;
  j["alpha_root"]              = c.alpha_root;
  j["gamma_root"]              = c.gamma_root;
  j["theta"]                   = c.theta;
  j["beta"]                    = c.beta;
  j["F"]                       = c.F;
  j["B"]                       = c.B;
  j["eta_tail"]                = c.eta_tail;
  j["iterations_root"]         = c.iterations_root;
  j["iterations_leaf"]         = c.iterations_leaf;
  j["root_hidden"]             = c.root_hidden;
  j["leaf_hidden"]             = c.leaf_hidden;
  j["leaf_feature_activation"] = std::string(nn::to_string(c.leaf_feature_activation));
  j["optimizer"]               = std::string(nn::to_string(c.optimizer));
  j["distance_kind"]           = std::string(to_string(c.distance_kind));
  j["rejection_rule"]          = std::string(root::to_string(c.rejection_rule));
  j["activation_space"]        = std::string(root::to_string(c.activation_space));
  j["seed"]                    = c.seed;
  j["initial_known"]           = c.initial_known;
  j["arrival_order"]           = c.arrival_order;
  j["flush_partial_buffers"]   = c.flush_partial_buffers;
  return j;
}

/// Checks every bound; throws ConfigError naming the first bad field.
inline void validate(RunConfig const &c)
{
  auto positive = [](double v, char const *key) {
    if (!(v > 0.0) || !std::isfinite(v))
    {
      throw ConfigError(key, "must be a positive finite number");
    }
  };
  auto at_least_one = [](std::size_t v, char const *key) {
    if (v == 0)
    {
      throw ConfigError(key, "must be at least 1");
    }
  };
  positive(c.lr_root, "lr_root");
  positive(c.lr_leaf, "lr_leaf");
  at_least_one(c.batch_size, "batch_size");
  at_least_one(c.alpha_root, "alpha_root");
  if (!(c.gamma_root >= 0.0 && c.gamma_root <= 1.0))
  {
    throw ConfigError("gamma_root", "must lie in [0, 1]");
  }
  if (!(c.theta > 0.0 && c.theta <= 1.0))
  {
    throw ConfigError("theta", "must lie in (0, 1]");
  }
  if (!(c.beta >= 0.0) || !std::isfinite(c.beta))
  {
    throw ConfigError("beta", "must be a non-negative finite number");
  }
  at_least_one(c.F, "F");
  if (c.B < 2)
  {
    throw ConfigError("B", "must be at least 2");
  }
  if (c.eta_tail < 2)
  {
    throw ConfigError("eta_tail", "must be at least 2");
  }
  at_least_one(c.iterations_root, "iterations_root");
  at_least_one(c.iterations_leaf, "iterations_leaf");
  for (auto const *layers : {&c.root_hidden, &c.leaf_hidden})
  {
    char const *key = layers == &c.root_hidden ? "root_hidden" : "leaf_hidden";
    if (layers->empty())
    {
      throw ConfigError(key, "needs at least one hidden layer");
    }
    if (std::find(layers->begin(), layers->end(), std::size_t{0}) != layers->end())
    {
      throw ConfigError(key, "layer widths must be positive");
    }
  }
  for (ClassId id : c.initial_known)
  {
    if (id <= 0)
    {
      throw ConfigError("initial_known", "class ids must be positive");
    }
  }
  for (ClassId id : c.arrival_order)
  {
    if (id <= 0)
    {
      throw ConfigError("arrival_order", "class ids must be positive");
    }
  }
}

/// Overlays the keys of `j` onto `base`. Unknown keys are rejected.
inline RunConfig merge_json(RunConfig base, Json const &j)
{
  if (!j.is_object())
  {
    throw ConfigError("config", "must be a JSON object");
  }
  using detail::json_count;
  using detail::json_get;
  using detail::json_real;
  using detail::parse_enum;
  for (auto const &[key, v] : j.items())
  {
    if (key == "lr_root") base.lr_root = json_real(v, key);
    else if (key == "lr_leaf") base.lr_leaf = json_real(v, key);
    else if (key == "batch_size") base.batch_size = json_count(v, key);
    else if (key == "alpha_root") base.alpha_root = json_count(v, key);
    else if (key == "gamma_root") base.gamma_root = json_real(v, key);
    else if (key == "theta") base.theta = json_real(v, key);
    else if (key == "beta") base.beta = json_real(v, key);
    else if (key == "F") base.F = json_count(v, key);
    else if (key == "B") base.B = json_count(v, key);
    else if (key == "eta_tail") base.eta_tail = json_count(v, key);
    else if (key == "iterations_root") base.iterations_root = json_count(v, key);
    else if (key == "iterations_leaf") base.iterations_leaf = json_count(v, key);
    else if (key == "root_hidden") base.root_hidden = json_get<std::vector<std::size_t>>(v, key);
    else if (key == "leaf_hidden") base.leaf_hidden = json_get<std::vector<std::size_t>>(v, key);
    else if (key == "leaf_feature_activation") base.leaf_feature_activation = parse_enum(v, key, nn::activation_from_string);
    else if (key == "optimizer") base.optimizer = parse_enum(v, key, nn::optimizer_from_string);
    else if (key == "distance_kind") base.distance_kind = parse_enum(v, key, distance_from_string);
    else if (key == "rejection_rule") base.rejection_rule = parse_enum(v, key, root::rejection_rule_from_string);
    else if (key == "activation_space") base.activation_space = parse_enum(v, key, root::activation_space_from_string);
    else if (key == "seed") base.seed = json_count(v, key);
    else if (key == "initial_known") base.initial_known = json_get<std::vector<ClassId>>(v, key);
    else if (key == "arrival_order") base.arrival_order = json_get<std::vector<ClassId>>(v, key);
    else if (key == "flush_partial_buffers") base.flush_partial_buffers = json_get<bool>(v, key);
    else throw ConfigError(key, "unknown configuration key");
  }
  return base;
}

inline RunConfig run_config_from_json(Json const &j)
{
  RunConfig c = merge_json(RunConfig{}, j);
  validate(c);
  return c;
}

inline std::vector<std::string> preset_names()
{
  return {"default", "rf", "twitter"};
}

/// Hyperparameter rows for the two reference workloads.
inline RunConfig preset(std::string const &name)
{
  RunConfig c;
  if (name == "default")
  {
    return c;
  }
  if (name == "rf")
  {
    c.lr_root    = 0.005;
    c.lr_leaf    = 0.002;
    c.batch_size = 50;
    c.alpha_root = 2;
    c.gamma_root = 0.008;
    c.theta      = 0.7;
    c.B          = 1000;
    return c;
  }
  if (name == "twitter")
  {
    c.lr_root    = 0.001;
    c.lr_leaf    = 0.002;
    c.batch_size = 20;
    c.alpha_root = 2;
    c.gamma_root = 0.008;
    c.theta      = 0.5;
    c.B          = 80;
    return c;
  }
  throw ConfigError("preset", "unknown preset '" + name + "'");
}

inline Json parse_json_text(std::string const &text, std::string const &what)
{
  try
  {
    return Json::parse(text);
  }
  catch (nlohmann::json::parse_error const &e)
  {
    throw ParseError(what + ": " + e.what());
  }
}

inline Json read_json_file(std::filesystem::path const &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw Error("cannot open '" + path.string() + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str(), path.string());
}

inline RunConfig load_run_config(std::filesystem::path const &path, RunConfig base = {})
{
  Json j;
  try
  {
    j = read_json_file(path);
  }
  catch (ParseError const &e)
  {
    throw ConfigError("config", e.what());
  }
  RunConfig c = merge_json(std::move(base), j);
  validate(c);
  return c;
}

/// Applies MDCC_<KEY> overrides (key upper-cased, e.g. MDCC_GAMMA_ROOT).
/// Values are read as JSON, falling back to a plain string.
inline RunConfig apply_env_overrides(RunConfig base,
                                     std::function<char const *(char const *)> const &getenv_fn = std::getenv)
{
  Json const keys  = to_json(base);
  Json       patch = Json::object();
  for (auto const &[key, _] : keys.items())
  {
    std::string var = "MDCC_" + key;
    std::transform(var.begin(), var.end(), var.begin(), [](unsigned char ch) { return std::toupper(ch); });
    char const *raw = getenv_fn(var.c_str());
    if (raw == nullptr)
    {
      continue;
    }
    Json v = Json::parse(raw, nullptr, false);
    patch[key] = v.is_discarded() ? Json(std::string(raw)) : v;
  }
  RunConfig c = merge_json(std::move(base), patch);
  validate(c);
  return c;
}

inline ProtocolConfig to_protocol_config(RunConfig const &c)
{
  validate(c);
  ProtocolConfig p;
  p.root.hidden_layers    = c.root_hidden;
  p.root.optimizer        = c.optimizer;
  p.root.learning_rate    = c.lr_root;
  p.root.batch_size       = c.batch_size;
  p.root.iterations       = c.iterations_root;
  p.root.alpha            = c.alpha_root;
  p.root.gamma            = c.gamma_root;
  p.root.tail_size        = c.eta_tail;
  p.root.rejection_rule   = c.rejection_rule;
  p.root.activation_space = c.activation_space;
  p.root.seed             = c.seed;

  auto &leaf              = p.cascade.leaf;
  leaf.hidden_layers      = c.leaf_hidden;
  leaf.feature_activation = c.leaf_feature_activation;
  leaf.optimizer          = c.optimizer;
  leaf.learning_rate      = c.lr_leaf;
  leaf.batch_size         = c.batch_size;
  leaf.iterations         = c.iterations_leaf;
  leaf.beta               = c.beta;
  leaf.theta              = c.theta;
  leaf.distance           = c.distance_kind;
  leaf.seed               = c.seed + 1;

  p.cascade.buffer_capacity = c.B;
  p.reference_capacity      = c.F;
  p.reference_seed          = c.seed + 2;
  p.flush_partial_buffers   = c.flush_partial_buffers;
  return p;
}

inline StreamSchedule make_schedule(RunConfig const &c, Dataset const &ds)
{
  StreamSchedule s = default_schedule(ds, c.seed + 3);
  if (!c.initial_known.empty())
  {
    s.initial_known = c.initial_known;
    if (c.arrival_order.empty())
    {
      s.arrival_order.clear();
      for (ClassId id : ds.classes(Split::train))
      {
        if (std::find(c.initial_known.begin(), c.initial_known.end(), id) == c.initial_known.end())
        {
          s.arrival_order.push_back(id);
        }
      }
    }
  }
  if (!c.arrival_order.empty())
  {
    s.arrival_order = c.arrival_order;
  }
  return s;
}

}  // namespace mdcc
