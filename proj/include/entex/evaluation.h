// Copyright 2026 The Entex Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Extraction and linking metrics with optional slicing by a document
// attribute. The overall row is always micro-aggregated over items.

#ifndef ENTEX_EVALUATION_H_
#define ENTEX_EVALUATION_H_

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "entex/document.h"

namespace entex {

struct MetricRow {
  int64_t docs = 0;
  int64_t tp = 0;
  int64_t fp = 0;
  int64_t fn = 0;
  int64_t correct = 0;  // linking
  int64_t total = 0;    // linking

  // Zero denominators give 0.
  double Precision() const;
  double Recall() const;
  double F1() const;
  double Accuracy() const;

  MetricRow &operator+=(const MetricRow &o);
};

enum class SliceBy { kNone, kLanguage, kDocType };
SliceBy ParseSliceBy(std::string_view name);  // "", "language", "doc_type"
const char *SliceByName(SliceBy slice);

enum class MatchLevel { kSpan, kToken };

struct EvalReport {
  std::string metric;  // "span_prf" or "linking_accuracy"
  SliceBy slice = SliceBy::kNone;
  MetricRow overall;
  std::map<std::string, MetricRow> slices;

  Json ToJson() const;
  // Aligned columns, one row per slice then "Overall".
  std::string ToText() const;
};

using SpansByDoc = std::map<std::string, std::vector<Span>>;
using DocIndex = std::map<std::string, const Document *>;

// The document universe is the key set of `gold` (documents without gold
// mentions must still be present, possibly with empty lists). Slicing needs
// `docs`. Token-level matching counts (field, token) pairs covered by spans.
EvalReport SpanPrf(const SpansByDoc &pred, const SpansByDoc &gold,
                   const DocIndex &docs = {}, SliceBy slice = SliceBy::kNone,
                   MatchLevel level = MatchLevel::kSpan);

struct LinkItem {
  std::string doc_id;
  std::string mention_id;
  std::optional<std::string> entity_id;  // nullopt = NIL
};

// Fraction of gold mentions whose prediction equals the gold entity. A
// missing prediction counts as wrong.
EvalReport LinkingAccuracy(const std::vector<LinkItem> &pred,
                           const std::vector<LinkItem> &gold,
                           const DocIndex &docs = {},
                           SliceBy slice = SliceBy::kNone);

struct TaskRates {
  double all_extracted_correct_rate = 0.0;
  double all_correct_extracted_rate = 0.0;
  int64_t tasks = 0;

  Json ToJson() const;
};

using EntitySetsByTask = std::map<std::string, std::set<std::string>>;

// Per gold task: pred \ gold has at most `tolerance` elements (first rate);
// gold \ pred has at most `tolerance` elements (second rate). Tasks absent
// from `pred` have an empty prediction.
TaskRates TaskAllCorrectRates(const EntitySetsByTask &pred,
                              const EntitySetsByTask &gold, int tolerance = 0);

}  // namespace entex

#endif  // ENTEX_EVALUATION_H_
