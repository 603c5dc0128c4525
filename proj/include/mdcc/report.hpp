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

// Report emission for protocol runs and frozen-model evaluations.

#include "mdcc/config.hpp"
#include "mdcc/dataset.hpp"
#include "mdcc/metrics.hpp"
#include "mdcc/protocol.hpp"
#include "mdcc/serialize.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace mdcc {

inline constexpr char const *kStageCsvHeader = "stage,en_accuracy,f_score,N,N_known,N_unknown,TP,FP,FN";

inline std::string stage_csv_row(StageReport const &r)
{
  using detail::format_double;
  auto const &c = r.counts;
  std::ostringstream os;
  os << r.stage << ',' << format_double(r.en_accuracy) << ',' << format_double(r.f_score) << ',' << c.n << ','
     << c.n_known << ',' << c.n_unknown << ',' << c.tp << ',' << c.fp << ',' << c.fn;
  return os.str();
}

inline void write_stage_csv(std::ostream &out, std::vector<StageReport> const &reports)
{
  out << kStageCsvHeader << '\n';
  for (auto const &r : reports)
  {
    out << stage_csv_row(r) << '\n';
  }
}

inline Json to_json(StageReport const &r)
{
  Json j;
  j["stage"]           = r.stage;
  j["leaves"]          = r.leaves;
  j["known_classes"]   = r.known_classes;
  j["unknown_classes"] = r.unknown_classes;
  j["en_accuracy"]     = r.en_accuracy;
  j["f_score"]         = r.f_score;
  j["counts"]          = {{"N", r.counts.n},   {"N_known", r.counts.n_known}, {"N_unknown", r.counts.n_unknown},
                          {"TP", r.counts.tp}, {"FP", r.counts.fp},           {"FN", r.counts.fn}};
  Json confusion       = Json::array();
  for (auto const &[truth, row] : r.confusion)
  {
    Json predicted = Json::object();
    for (auto const &[p, n] : row)
    {
      predicted[std::to_string(p)] = n;
    }
    confusion.push_back({{"truth", truth}, {"predicted", std::move(predicted)}});
  }
  j["confusion"] = std::move(confusion);
  return j;
}

inline std::vector<StageReport> detection_reports(ProtocolResult const &r)
{
  std::vector<StageReport> out;
  for (auto const &s : r.stages)
  {
    out.push_back(s.detection);
  }
  return out;
}

inline std::vector<StageReport> recognition_reports(ProtocolResult const &r)
{
  std::vector<StageReport> out;
  for (auto const &s : r.stages)
  {
    out.push_back(s.recognition);
  }
  return out;
}

inline Json protocol_report_json(ProtocolResult const &r, Json const &config_echo)
{
  Json j;
  j["config"]              = config_echo;
  j["root_train_accuracy"] = r.root_train_accuracy;
  j["stages"]              = Json::array();
  for (auto const &s : r.stages)
  {
    Json sj;
    sj["stage"]          = s.detection.stage;
    sj["arriving_class"] = s.arriving_class;
    sj["detection"]      = to_json(s.detection);
    sj["recognition"]    = to_json(s.recognition);
    sj["transitions"]    = Json::array();
    for (auto const &t : s.transitions)
    {
      sj["transitions"].push_back({{"new_stage", t.new_stage},
                                   {"new_class", t.new_class},
                                   {"group_id", t.group_id},
                                   {"buffer_size", t.buffer_size},
                                   {"iterations", t.history.size()},
                                   {"penalty_before", t.penalty_before},
                                   {"penalty_after", t.penalty_after}});
    }
    j["stages"].push_back(std::move(sj));
  }
  return j;
}

/// One row per leaf training iteration.
inline void write_loss_csv(std::ostream &out, ProtocolResult const &r)
{
  using detail::format_double;
  out << "leaf,iteration,outer,penalty,total\n";
  for (auto const &s : r.stages)
  {
    for (auto const &t : s.transitions)
    {
      for (std::size_t i = 0; i < t.history.size(); ++i)
      {
        auto const &h = t.history[i];
        out << t.new_stage << ',' << i << ',' << format_double(h.outer) << ',' << format_double(h.penalty) << ','
            << format_double(h.total) << '\n';
      }
    }
  }
}

inline void write_text_file(std::filesystem::path const &path, std::string const &text)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
  {
    throw Error("cannot write '" + path.string() + "'");
  }
  out << text;
  if (!out.flush())
  {
    throw Error("failed writing '" + path.string() + "'");
  }
}

struct RunOutputs
{
  std::filesystem::path stages_csv;
  std::filesystem::path recognition_csv;
  std::filesystem::path report_json;
  std::filesystem::path losses_csv;
  std::filesystem::path cascade_json;
};

/// Writes stages.csv (post-transition stages), recognition.csv (after each
/// arrival), report.json, losses.csv and cascade.json into `dir`.
inline RunOutputs write_run_outputs(std::filesystem::path const &dir, ProtocolResult const &r,
                                    Json const &config_echo)
{
  std::filesystem::create_directories(dir);
  RunOutputs o{dir / "stages.csv", dir / "recognition.csv", dir / "report.json", dir / "losses.csv",
               dir / "cascade.json"};
  std::ostringstream s, rec, loss;
  write_stage_csv(s, detection_reports(r));
  write_stage_csv(rec, recognition_reports(r));
  write_loss_csv(loss, r);
  write_text_file(o.stages_csv, s.str());
  write_text_file(o.recognition_csv, rec.str());
  write_text_file(o.losses_csv, loss.str());
  write_text_file(o.report_json, dump(protocol_report_json(r, config_echo)));
  save_cascade(r.cascade, o.cascade_json, config_echo);
  return o;
}

}  // namespace mdcc
