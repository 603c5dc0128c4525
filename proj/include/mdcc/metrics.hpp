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

// Open-world metrics. "Unknown" is the positive class:
//   TP  unknown-class sample predicted unknown
//   FP  known-class sample predicted unknown
//   FN  unknown-class sample predicted as some known class

#include "mdcc/error.hpp"
#include "mdcc/instance.hpp"

#include <iostream>
#include <map>
#include <set>
#include <span>
#include <vector>

namespace mdcc {

struct Counts
{
  std::size_t n{};
  std::size_t n_known{};    // known-class samples with the exact class predicted
  std::size_t n_unknown{};  // unknown-class samples predicted unknown
  std::size_t tp{};
  std::size_t fp{};
  std::size_t fn{};

  friend bool operator==(Counts const &, Counts const &) = default;
};

inline double en_accuracy(Counts const &c)
{
  if (c.n == 0)
  {
    throw Error("EN-accuracy is undefined for an empty test set");
  }
  return static_cast<double>(c.n_known + c.n_unknown) / static_cast<double>(c.n);
}

/// 2TP / (2TP + FP + FN); all-zero counts give 0 with a warning on stderr.
inline double f_score(std::size_t tp, std::size_t fp, std::size_t fn)
{
  std::size_t const denom = 2 * tp + fp + fn;
  if (denom == 0)
  {
    std::clog << "warning: F-score with TP = FP = FN = 0 is reported as 0\n";
    return 0.0;
  }
  return 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

inline double f_score(Counts const &c)
{
  return f_score(c.tp, c.fp, c.fn);
}

/// One scored test prediction. `truth_known` says whether the true class has
/// been learned at the stage being evaluated; `predicted` is already mapped
/// back to ground-truth ids (kUnknown for a rejection).
struct Outcome
{
  ClassId truth{};
  bool    truth_known{};
  ClassId predicted{kUnknown};
};

inline Counts tally(std::span<Outcome const> outcomes)
{
  Counts c;
  c.n = outcomes.size();
  for (auto const &o : outcomes)
  {
    bool const rejected = o.predicted == kUnknown;
    if (o.truth_known)
    {
      c.n_known += (!rejected && o.predicted == o.truth) ? 1 : 0;
      c.fp += rejected ? 1 : 0;
    }
    else
    {
      c.n_unknown += rejected ? 1 : 0;
      c.tp += rejected ? 1 : 0;
      c.fn += rejected ? 0 : 1;
    }
  }
  return c;
}

struct StageReport
{
  std::size_t          stage{};   // 1-based protocol stage
  std::size_t          leaves{};  // cascade stage t at evaluation time
  std::vector<ClassId> known_classes;
  std::vector<ClassId> unknown_classes;
  Counts               counts;
  double               en_accuracy{};
  double               f_score{};
  /// truth class -> predicted (truth-mapped, 0 = unknown) -> count
  std::map<ClassId, std::map<ClassId, std::size_t>> confusion;
};

inline StageReport make_report(std::size_t stage, std::size_t leaves, std::span<Outcome const> outcomes)
{
  StageReport r;
  r.stage  = stage;
  r.leaves = leaves;
  r.counts = tally(outcomes);
  std::set<ClassId> known, unknown;
  for (auto const &o : outcomes)
  {
    (o.truth_known ? known : unknown).insert(o.truth);
    ++r.confusion[o.truth][o.predicted];
  }
  r.known_classes.assign(known.begin(), known.end());
  r.unknown_classes.assign(unknown.begin(), unknown.end());
  r.en_accuracy = en_accuracy(r.counts);
  r.f_score     = f_score(r.counts);
  return r;
}

}  // namespace mdcc
