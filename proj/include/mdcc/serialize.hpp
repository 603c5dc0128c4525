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

// Versioned JSON model files. Doubles are written in shortest round-trip
// form, so save -> load -> save is byte-identical.

#include "mdcc/cascade.hpp"
#include "mdcc/config.hpp"
#include "mdcc/dataset.hpp"
#include "mdcc/error.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <map>
#include <string>
#include <vector>

namespace mdcc {

inline constexpr char const *kCascadeFormat = "mdcc-cascade";
inline constexpr char const *kRootFormat    = "mdcc-root";
inline constexpr int         kFormatVersion = 1;

namespace detail {

inline Json const &field(Json const &j, char const *key, std::string const &where)
{
  if (!j.is_object())
  {
    throw ParseError(where + ": expected an object");
  }
  auto it = j.find(key);
  if (it == j.end())
  {
    throw ParseError(where + ": missing field '" + key + "'");
  }
  return *it;
}

template <class T>
T read(Json const &j, char const *key, std::string const &where)
{
  try
  {
    return field(j, key, where).get<T>();
  }
  catch (nlohmann::json::exception const &e)
  {
    throw ParseError(where + "." + key + ": " + e.what());
  }
}

inline Json tensor_json(Tensor const &t)
{
  Json j;
  j["shape"] = t.shape();
  j["data"]  = t.values();
  return j;
}

inline Tensor tensor_from(Json const &j, std::string const &where)
{
  auto shape = read<Tensor::Shape>(j, "shape", where);
  auto data  = read<Vector>(j, "data", where);
  try
  {
    return Tensor(std::move(shape), std::move(data));
  }
  catch (Error const &e)
  {
    throw ParseError(where + ": " + e.what());
  }
}

inline void check_header(Json const &j, char const *format, std::string const &where)
{
  auto const fmt = read<std::string>(j, "format", where);
  if (fmt != format)
  {
    throw ParseError(where + ": expected format '" + format + "', found '" + fmt + "'");
  }
  auto const version = read<int>(j, "version", where);
  if (version != kFormatVersion)
  {
    throw ParseError(where + ": unsupported format version " + std::to_string(version) + " (this build reads " +
                     std::to_string(kFormatVersion) + ")");
  }
}

inline void write_text(std::filesystem::path const &path, std::string const &text)
{
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
    {
      throw Error("cannot write '" + tmp.string() + "'");
    }
    out << text;
    if (!out.flush())
    {
      throw Error("failed writing '" + tmp.string() + "'");
    }
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace detail

inline std::string dump(Json const &j)
{
  return j.dump(1) + "\n";
}

// ---- network ---------------------------------------------------------------

inline Json to_json(nn::Network const &net)
{
  Json j;
  j["seed"]   = net.seed();
  j["layers"] = Json::array();
  for (auto const &l : net.layers())
  {
    Json lj;
    lj["in_dim"]     = l.spec.in_dim;
    lj["out_dim"]    = l.spec.out_dim;
    lj["activation"] = std::string(nn::to_string(l.spec.activation));
    lj["weight"]     = detail::tensor_json(l.weight);
    lj["bias"]       = detail::tensor_json(l.bias);
    j["layers"].push_back(std::move(lj));
  }
  return j;
}

inline nn::Network network_from_json(Json const &j, std::string const &where = "network")
{
  using detail::read;
  std::vector<nn::DenseLayer> layers;
  auto const                 &arr = detail::field(j, "layers", where);
  if (!arr.is_array() || arr.empty())
  {
    throw ParseError(where + ".layers: expected a non-empty array");
  }
  for (std::size_t i = 0; i < arr.size(); ++i)
  {
    std::string const w = where + ".layers[" + std::to_string(i) + "]";
    nn::DenseLayer    l;
    l.spec.in_dim  = read<std::size_t>(arr[i], "in_dim", w);
    l.spec.out_dim = read<std::size_t>(arr[i], "out_dim", w);
    try
    {
      l.spec.activation = nn::activation_from_string(read<std::string>(arr[i], "activation", w));
    }
    catch (ParseError const &e)
    {
      throw ParseError(w + ": " + e.what());
    }
    l.weight = detail::tensor_from(detail::field(arr[i], "weight", w), w + ".weight");
    l.bias   = detail::tensor_from(detail::field(arr[i], "bias", w), w + ".bias");
    layers.push_back(std::move(l));
  }
  try
  {
    return nn::Network(std::move(layers), read<std::uint64_t>(j, "seed", where));
  }
  catch (ShapeError const &e)
  {
    throw ParseError(where + ": " + e.what());
  }
}

// ---- root ------------------------------------------------------------------

inline Json to_json(root::RootModel const &m)
{
  Json j;
  j["network"]      = to_json(m.network);
  j["class_labels"] = m.class_labels;
  j["mavs"]         = m.mavs;
  j["weibulls"]     = Json::array();
  for (auto const &w : m.weibulls)
  {
    j["weibulls"].push_back(
        {{"shape", w.shape}, {"scale", w.scale}, {"tail_size", w.tail_size}, {"translation", w.translation}});
  }
  j["alpha"]            = m.alpha;
  j["gamma"]            = m.gamma;
  j["rejection_rule"]   = std::string(root::to_string(m.rejection_rule));
  j["activation_space"] = std::string(root::to_string(m.activation_space));
  j["train_accuracy"]   = m.train_accuracy;
  return j;
}

inline root::RootModel root_from_json(Json const &j, std::string const &where = "root")
{
  using detail::read;
  root::RootModel m;
  m.network      = network_from_json(detail::field(j, "network", where), where + ".network");
  m.class_labels = read<std::vector<ClassId>>(j, "class_labels", where);
  m.mavs         = read<std::vector<Vector>>(j, "mavs", where);
  auto const &ws = detail::field(j, "weibulls", where);
  if (!ws.is_array())
  {
    throw ParseError(where + ".weibulls: expected an array");
  }
  for (std::size_t i = 0; i < ws.size(); ++i)
  {
    std::string const w = where + ".weibulls[" + std::to_string(i) + "]";
    m.weibulls.push_back({read<double>(ws[i], "shape", w), read<double>(ws[i], "scale", w),
                          read<std::size_t>(ws[i], "tail_size", w), read<double>(ws[i], "translation", w)});
  }
  m.alpha          = read<std::size_t>(j, "alpha", where);
  m.gamma          = read<double>(j, "gamma", where);
  m.train_accuracy = read<double>(j, "train_accuracy", where);
  try
  {
    m.rejection_rule   = root::rejection_rule_from_string(read<std::string>(j, "rejection_rule", where));
    m.activation_space = root::activation_space_from_string(read<std::string>(j, "activation_space", where));
  }
  catch (Error const &e)
  {
    throw ParseError(where + ": " + e.what());
  }
  std::size_t const k = m.class_labels.size();
  std::size_t const width =
      m.activation_space == root::ActivationSpace::logits ? m.network.output_dim() : m.network.feature_dim();
  if (k < 2 || m.network.output_dim() != k || m.mavs.size() != k || m.weibulls.size() != k)
  {
    throw ParseError(where + ": class labels, output layer, MAVs and Weibull models disagree in count");
  }
  for (auto const &mav : m.mavs)
  {
    if (mav.size() != width)
    {
      throw ParseError(where + ": MAV length does not match the activation space");
    }
  }
  if (m.alpha == 0 || m.alpha > k)
  {
    throw ParseError(where + ": alpha out of range");
  }
  return m;
}

inline std::string serialize_root(root::RootModel const &m, Json const &config_echo = Json::object())
{
  Json j;
  j["format"]  = kRootFormat;
  j["version"] = kFormatVersion;
  j["config"]  = config_echo;
  j["root"]    = to_json(m);
  return dump(j);
}

inline root::RootModel parse_root(std::string const &text, std::string const &where = "root file")
{
  Json const j = parse_json_text(text, where);
  detail::check_header(j, kRootFormat, where);
  return root_from_json(detail::field(j, "root", where), where + ".root");
}

inline void save_root(root::RootModel const &m, std::filesystem::path const &path,
                      Json const &config_echo = Json::object())
{
  detail::write_text(path, serialize_root(m, config_echo));
}

inline root::RootModel load_root(std::filesystem::path const &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw Error("cannot open '" + path.string() + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_root(ss.str(), path.string());
}

// ---- leaf ------------------------------------------------------------------

inline Json to_json(leaf::LeafModel const &m)
{
  Json j;
  j["network"]        = to_json(m.network);
  j["class_label"]    = m.class_label;
  j["center"]         = m.center;
  j["rejection_line"] = m.rejection_line;
  j["theta"]          = m.theta;
  j["beta"]           = m.beta;
  j["distance"]       = std::string(to_string(m.distance));
  j["source_label"]   = m.source_label ? Json(*m.source_label) : Json(nullptr);
  return j;
}

inline leaf::LeafModel leaf_from_json(Json const &j, std::string const &where = "leaf")
{
  using detail::read;
  leaf::LeafModel m;
  m.network        = network_from_json(detail::field(j, "network", where), where + ".network");
  m.class_label    = read<ClassId>(j, "class_label", where);
  m.center         = read<Vector>(j, "center", where);
  m.rejection_line = read<double>(j, "rejection_line", where);
  m.theta          = read<double>(j, "theta", where);
  m.beta           = read<double>(j, "beta", where);
  try
  {
    m.distance = distance_from_string(read<std::string>(j, "distance", where));
  }
  catch (Error const &e)
  {
    throw ParseError(where + ": " + e.what());
  }
  auto const &src = detail::field(j, "source_label", where);
  if (!src.is_null())
  {
    m.source_label = read<ClassId>(j, "source_label", where);
  }
  if (m.center.size() != m.network.feature_dim())
  {
    throw ParseError(where + ": center length does not match the feature layer");
  }
  if (!(m.rejection_line >= 0.0) || !(m.theta > 0.0 && m.theta <= 1.0) || m.class_label <= 0)
  {
    throw ParseError(where + ": rejection line, theta or class label out of range");
  }
  return m;
}

/// Canonical bytes of one cascade node; used to check that existing nodes
/// never change.
inline std::string serialize_node(root::RootModel const &m)
{
  return dump(to_json(m));
}

inline std::string serialize_node(leaf::LeafModel const &m)
{
  return dump(to_json(m));
}

// ---- cascade ---------------------------------------------------------------

inline Json to_json(CascadeConfig const &c)
{
  auto const &l = c.leaf;
  Json        leaf;
  leaf["hidden_layers"]      = l.hidden_layers;
  leaf["feature_activation"] = std::string(nn::to_string(l.feature_activation));
  leaf["optimizer"]          = std::string(nn::to_string(l.optimizer));
  leaf["learning_rate"]      = l.learning_rate;
  leaf["batch_size"]         = l.batch_size;
  leaf["iterations"]         = l.iterations;
  leaf["beta"]               = l.beta;
  leaf["theta"]              = l.theta;
  leaf["distance"]           = std::string(to_string(l.distance));
  leaf["seed"]               = l.seed;
  return {{"buffer_capacity", c.buffer_capacity}, {"leaf", std::move(leaf)}};
}

inline CascadeConfig cascade_config_from_json(Json const &j, std::string const &where = "cascade_config")
{
  using detail::read;
  CascadeConfig c;
  c.buffer_capacity     = read<std::size_t>(j, "buffer_capacity", where);
  auto const       &lj  = detail::field(j, "leaf", where);
  std::string const w   = where + ".leaf";
  auto             &l   = c.leaf;
  l.hidden_layers       = read<std::vector<std::size_t>>(lj, "hidden_layers", w);
  l.learning_rate       = read<double>(lj, "learning_rate", w);
  l.batch_size          = read<std::size_t>(lj, "batch_size", w);
  l.iterations          = read<std::size_t>(lj, "iterations", w);
  l.beta                = read<double>(lj, "beta", w);
  l.theta               = read<double>(lj, "theta", w);
  l.seed                = read<std::uint64_t>(lj, "seed", w);
  try
  {
    l.feature_activation = nn::activation_from_string(read<std::string>(lj, "feature_activation", w));
    l.optimizer          = nn::optimizer_from_string(read<std::string>(lj, "optimizer", w));
    l.distance           = distance_from_string(read<std::string>(lj, "distance", w));
  }
  catch (Error const &e)
  {
    throw ParseError(w + ": " + e.what());
  }
  return c;
}

inline Json cascade_to_json(Cascade const &c, Json const &config_echo = Json::object())
{
  Json j;
  j["format"]         = kCascadeFormat;
  j["version"]        = kFormatVersion;
  j["stage"]          = c.stage();
  j["known_classes"]  = c.known_classes();
  j["cascade_config"] = to_json(c.config());

  auto const &ref = c.reference_set();
  Json        rj;
  rj["capacity"]   = ref.capacity();
  rj["seed"]       = ref.seed();
  rj["rebalances"] = ref.rebalance_count();
  rj["classes"]    = Json::array();
  for (auto const &[cls, members] : ref.per_class())
  {
    std::vector<std::string> ids;
    for (auto const &inst : members)
    {
      ids.push_back(inst.id);
    }
    rj["classes"].push_back({{"class", cls}, {"ids", ids}});
  }
  j["reference_set"] = std::move(rj);

  j["buffers"] = Json::array();
  for (auto const &[group, buf] : c.buffers())
  {
    std::vector<std::string> ids;
    for (auto const &inst : buf.instances)
    {
      ids.push_back(inst.id);
    }
    j["buffers"].push_back({{"group_id", group}, {"capacity", buf.capacity}, {"ids", ids}});
  }

  j["root"]   = to_json(c.root());
  j["leaves"] = Json::array();
  for (auto const &leaf : c.leaves())
  {
    j["leaves"].push_back(to_json(leaf));
  }
  j["config"] = config_echo;
  return j;
}

inline std::string serialize_cascade(Cascade const &c, Json const &config_echo = Json::object())
{
  return dump(cascade_to_json(c, config_echo));
}

/// Rebuilds a cascade. With a dataset, reference-set and buffer instances are
/// resolved by id; without one they keep only their ids (recognition works,
/// spawning further leaves does not).
inline Cascade cascade_from_json(Json const &j, Dataset const *dataset = nullptr, std::string const &where = "cascade")
{
  using detail::read;
  detail::check_header(j, kCascadeFormat, where);

  auto resolve = [&](std::string const &id, std::string const &ctx) {
    if (dataset == nullptr)
    {
      Instance inst;
      inst.id = id;
      return inst;
    }
    Instance const *found = dataset->find(id);
    if (found == nullptr)
    {
      throw ParseError(ctx + ": instance '" + id + "' is not in the dataset");
    }
    return *found;
  };

  root::RootModel root   = root_from_json(detail::field(j, "root", where), where + ".root");
  CascadeConfig   config = cascade_config_from_json(detail::field(j, "cascade_config", where), where + ".cascade_config");

  std::vector<leaf::LeafModel> leaves;
  auto const                  &lj = detail::field(j, "leaves", where);
  if (!lj.is_array())
  {
    throw ParseError(where + ".leaves: expected an array");
  }
  for (std::size_t i = 0; i < lj.size(); ++i)
  {
    leaves.push_back(leaf_from_json(lj[i], where + ".leaves[" + std::to_string(i) + "]"));
    if (leaves.back().network.input_dim() != root.network.input_dim())
    {
      throw ParseError(where + ".leaves[" + std::to_string(i) + "]: input dimension differs from the root");
    }
  }
  auto const stage = read<std::size_t>(j, "stage", where);
  if (stage != leaves.size())
  {
    throw ParseError(where + ": stage " + std::to_string(stage) + " but " + std::to_string(leaves.size()) +
                     " leaves");
  }

  std::string const                        rw = where + ".reference_set";
  auto const                              &rj = detail::field(j, "reference_set", where);
  std::map<ClassId, std::vector<Instance>> per_class;
  auto const                              &classes = detail::field(rj, "classes", rw);
  if (!classes.is_array())
  {
    throw ParseError(rw + ".classes: expected an array");
  }
  for (auto const &cj : classes)
  {
    auto const cls = read<ClassId>(cj, "class", rw);
    auto      &dst = per_class[cls];
    for (auto const &id : read<std::vector<std::string>>(cj, "ids", rw))
    {
      Instance inst = resolve(id, rw);
      inst.label    = cls;
      dst.push_back(std::move(inst));
    }
  }
  ReferenceSet reference;
  try
  {
    reference = ReferenceSet::restore(read<std::size_t>(rj, "capacity", rw), read<std::uint64_t>(rj, "seed", rw),
                                      read<std::uint64_t>(rj, "rebalances", rw), std::move(per_class));
  }
  catch (ConfigError const &e)
  {
    throw ParseError(rw + ": " + e.what());
  }

  std::map<std::string, leaf::Buffer> buffers;
  auto const                         &bj = detail::field(j, "buffers", where);
  if (!bj.is_array())
  {
    throw ParseError(where + ".buffers: expected an array");
  }
  for (auto const &b : bj)
  {
    leaf::Buffer buf;
    buf.group_id = read<std::string>(b, "group_id", where + ".buffers");
    buf.capacity = read<std::size_t>(b, "capacity", where + ".buffers");
    for (auto const &id : read<std::vector<std::string>>(b, "ids", where + ".buffers"))
    {
      Instance inst = resolve(id, where + ".buffers");
      inst.group_id = buf.group_id;
      buf.instances.push_back(std::move(inst));
    }
    buffers.emplace(buf.group_id, std::move(buf));
  }

  try
  {
    return Cascade::restore(std::move(root), std::move(leaves), std::move(reference), std::move(buffers),
                            read<std::vector<ClassId>>(j, "known_classes", where), std::move(config));
  }
  catch (ParseError const &)
  {
    throw;
  }
  catch (Error const &e)
  {
    throw ParseError(where + ": " + e.what());
  }
}

inline Cascade parse_cascade(std::string const &text, Dataset const *dataset = nullptr,
                             std::string const &where = "cascade file")
{
  return cascade_from_json(parse_json_text(text, where), dataset, where);
}

inline void save_cascade(Cascade const &c, std::filesystem::path const &path, Json const &config_echo = Json::object())
{
  detail::write_text(path, serialize_cascade(c, config_echo));
}

inline Cascade load_cascade(std::filesystem::path const &path, Dataset const *dataset = nullptr)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
  {
    throw Error("cannot open '" + path.string() + "'");
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_cascade(ss.str(), dataset, path.string());
}

/// The config echo stored with a cascade file.
inline Json load_cascade_config_echo(std::filesystem::path const &path)
{
  Json const j = read_json_file(path);
  detail::check_header(j, kCascadeFormat, path.string());
  return detail::field(j, "config", path.string());
}

}  // namespace mdcc
