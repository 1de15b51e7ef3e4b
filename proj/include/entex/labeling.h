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

// Rater label aggregation. Open-world labels are highlighted spans and are
// combined token by token; closed-world labels are per-mention entity
// selections combined by vote count.

#ifndef ENTEX_LABELING_H_
#define ENTEX_LABELING_H_

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "entex/document.h"
#include "entex/matcher.h"

namespace entex {

struct RaterSpanLabel {
  std::string task_id;
  std::string rater_id;
  std::vector<Span> spans;
};

struct ChoiceSelection {
  std::string mention_id;
  std::optional<std::string> entity_id;  // nullopt = none of these

  bool operator==(const ChoiceSelection &) const = default;
};

struct RaterChoiceLabel {
  std::string task_id;
  std::string rater_id;
  std::vector<ChoiceSelection> selections;
};

Json RaterSpanLabelToJson(const RaterSpanLabel &label);
RaterSpanLabel RaterSpanLabelFromJson(const Json &j);
Json RaterChoiceLabelToJson(const RaterChoiceLabel &label);
RaterChoiceLabel RaterChoiceLabelFromJson(const Json &j);

enum class ConsensusMethod { kAnd, kOr, kMajority, kKOfN };

const char *ConsensusMethodName(ConsensusMethod method);
// "and", "or", "majority", "k_of_n".
ConsensusMethod ParseConsensusMethod(std::string_view name);

struct ConsensusConfig {
  ConsensusMethod method = ConsensusMethod::kMajority;
  int k = 0;  // k_of_n only
  int expected_raters = 3;

  // and: n, or: 1, majority: floor(n/2)+1, k_of_n: k.
  int Threshold() const;
  void Validate() const;
};

struct GoldSpan {
  Span span;
  int vote_count = 0;
  double salience = 0.0;

  bool operator==(const GoldSpan &) const = default;
};

struct GoldChoice {
  std::string mention_id;
  std::string entity_id;
  int vote_count = 0;
  double salience = 0.0;

  bool operator==(const GoldChoice &) const = default;
};

struct GoldLabel {
  std::string task_id;
  ConsensusConfig config;
  std::vector<GoldSpan> spans;      // open world, sorted
  std::vector<GoldChoice> choices;  // closed world, task mention order
  std::vector<std::string> warnings;

  std::vector<Span> SpanList() const;
};

// {task_id, method, k?, n, threshold, spans:[{field, start, end, vote_count,
// salience}] | choices:[{mention_id, entity_id, vote_count, salience}]}
Json GoldLabelToJson(const GoldLabel &gold);
GoldLabel GoldLabelFromJson(const Json &j);

// Validates spans against `doc` and merges overlapping spans within a field.
// Returns the offending span on failure.
struct SpanCheck {
  std::vector<Span> spans;  // sorted, merged
  std::vector<std::string> warnings;
  std::optional<Span> invalid;
  std::string error;
};
SpanCheck CheckRaterSpans(const Document &doc, const std::vector<Span> &spans);

// Token-level vote counting. A token is covered by a rater when one of the
// rater's spans overlaps it. Kept tokens form maximal runs within a field;
// a span's vote_count is the minimum over its tokens.
GoldLabel AggregateSpans(const std::vector<RaterSpanLabel> &labels,
                         const ConsensusConfig &cfg, const Document &doc);

// Per mention, entities selected by at least `threshold` raters survive and
// the highest-voted one is kept (ties: higher prior, then smaller id).
// "None of these" votes never become gold. Mentions with no surviving
// entity are left out.
GoldLabel AggregateChoices(const std::vector<RaterChoiceLabel> &labels,
                           const ConsensusConfig &cfg,
                           const std::vector<CandidateMention> &mentions);

// Adds a span at every other token-aligned occurrence (in any field) of each
// gold span's normalized surface, unless it overlaps a span already present.
// Added spans copy the source's vote_count; surfaces with several sources
// take the largest.
GoldLabel BroadcastMentions(const Document &doc, const GoldLabel &gold);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Exact (field, start, end) matching over span sets. Both empty gives 1;
// exactly one empty gives 0.
Prf ExactMatchF1(const std::vector<Span> &pred, const std::vector<Span> &gold);

struct CalibrationThresholds {
  double golden = 0.6;
  double consensus = 0.5;
};

using SpanPairs = std::vector<std::pair<std::vector<Span>, std::vector<Span>>>;

struct CalibrationReport {
  std::string rater_id;
  double f1_vs_golden = 0.0;
  std::optional<double> f1_vs_consensus;  // absent without consensus results
  int golden_tasks = 0;
  int consensus_tasks = 0;
  bool flagged = false;

  Json ToJson() const;
};

// Each pair is (rater spans, reference spans). Throws on an empty golden set.
CalibrationReport RaterCalibration(const std::string &rater_id,
                                   const SpanPairs &golden_results,
                                   const SpanPairs &consensus_results,
                                   const CalibrationThresholds &thresholds = {});

}  // namespace entex

#endif  // ENTEX_LABELING_H_
