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

#include "entex/labeling.h"

#include <algorithm>
#include <map>
#include <set>

#include "entex/encoder.h"
#include "entex/error.h"
#include "entex/text.h"

namespace entex {

namespace {

Error Invalid(const std::string &message) {
  return Error(ErrorCode::kInvalidArgument, message);
}

std::string SpanText(const Span &s) {
  return s.field + ":" + std::to_string(s.start) + "-" + std::to_string(s.end);
}

std::set<std::string> CheckRaters(const std::string &task_id,
                                  const std::vector<std::string> &raters,
                                  const std::vector<std::string> &tasks,
                                  const ConsensusConfig &cfg) {
  if (raters.empty()) throw Invalid("aggregation needs at least one rater");
  std::set<std::string> seen;
  for (size_t i = 0; i < raters.size(); ++i) {
    if (tasks[i] != task_id) {
      throw Invalid("labels from mixed tasks: " + task_id + " and " +
                    tasks[i]);
    }
    if (!seen.insert(raters[i]).second) {
      throw Invalid("rater " + raters[i] + " labeled task " + task_id +
                    " more than once");
    }
  }
  if (static_cast<int>(seen.size()) > cfg.expected_raters) {
    throw Invalid("task " + task_id + " has " + std::to_string(seen.size()) +
                  " raters but expects " +
                  std::to_string(cfg.expected_raters));
  }
  return seen;
}

}  // namespace

Json RaterSpanLabelToJson(const RaterSpanLabel &label) {
  Json spans = Json::array();
  for (const Span &s : label.spans) spans.push_back(SpanToJson(s));
  return {{"task_id", label.task_id},
          {"rater_id", label.rater_id},
          {"spans", spans}};
}

RaterSpanLabel RaterSpanLabelFromJson(const Json &j) {
  RaterSpanLabel label;
  try {
    label.task_id = j.at("task_id").get<std::string>();
    label.rater_id = j.at("rater_id").get<std::string>();
    for (const Json &s : j.at("spans")) label.spans.push_back(SpanFromJson(s));
  } catch (const Json::exception &e) {
    throw Invalid(std::string("bad span label: ") + e.what());
  }
  return label;
}

Json RaterChoiceLabelToJson(const RaterChoiceLabel &label) {
  Json selections = Json::array();
  for (const ChoiceSelection &s : label.selections) {
    Json e = s.entity_id ? Json(*s.entity_id) : Json(nullptr);
    selections.push_back({{"mention_id", s.mention_id}, {"entity_id", e}});
  }
  return {{"task_id", label.task_id},
          {"rater_id", label.rater_id},
          {"selections", selections}};
}

RaterChoiceLabel RaterChoiceLabelFromJson(const Json &j) {
  RaterChoiceLabel label;
  try {
    label.task_id = j.at("task_id").get<std::string>();
    label.rater_id = j.at("rater_id").get<std::string>();
    for (const Json &s : j.at("selections")) {
      ChoiceSelection sel;
      sel.mention_id = s.at("mention_id").get<std::string>();
      const Json &e = s.at("entity_id");
      if (!e.is_null()) sel.entity_id = e.get<std::string>();
      label.selections.push_back(std::move(sel));
    }
  } catch (const Json::exception &e) {
    throw Invalid(std::string("bad choice label: ") + e.what());
  }
  return label;
}

const char *ConsensusMethodName(ConsensusMethod method) {
  switch (method) {
    case ConsensusMethod::kAnd:
      return "and";
    case ConsensusMethod::kOr:
      return "or";
    case ConsensusMethod::kMajority:
      return "majority";
    case ConsensusMethod::kKOfN:
      return "k_of_n";
  }
  return "?";
}

ConsensusMethod ParseConsensusMethod(std::string_view name) {
  if (name == "and") return ConsensusMethod::kAnd;
  if (name == "or") return ConsensusMethod::kOr;
  if (name == "majority") return ConsensusMethod::kMajority;
  if (name == "k_of_n") return ConsensusMethod::kKOfN;
  throw Invalid("unknown consensus method: " + std::string(name));
}

int ConsensusConfig::Threshold() const {
  switch (method) {
    case ConsensusMethod::kAnd:
      return expected_raters;
    case ConsensusMethod::kOr:
      return 1;
    case ConsensusMethod::kMajority:
      return expected_raters / 2 + 1;
    case ConsensusMethod::kKOfN:
      return k;
  }
  return expected_raters;
}

void ConsensusConfig::Validate() const {
  if (expected_raters < 1) throw Invalid("expected_raters must be >= 1");
  if (method == ConsensusMethod::kKOfN && (k < 1 || k > expected_raters)) {
    throw Invalid("k_of_n needs 1 <= k <= n");
  }
}

std::vector<Span> GoldLabel::SpanList() const {
  std::vector<Span> out;
  out.reserve(spans.size());
  for (const GoldSpan &g : spans) out.push_back(g.span);
  return out;
}

Json GoldLabelToJson(const GoldLabel &gold) {
  Json j = {{"task_id", gold.task_id},
            {"method", ConsensusMethodName(gold.config.method)},
            {"n", gold.config.expected_raters},
            {"threshold", gold.config.Threshold()}};
  if (gold.config.method == ConsensusMethod::kKOfN) j["k"] = gold.config.k;
  if (!gold.choices.empty() || gold.spans.empty()) {
    Json choices = Json::array();
    for (const GoldChoice &c : gold.choices) {
      choices.push_back({{"mention_id", c.mention_id},
                         {"entity_id", c.entity_id},
                         {"vote_count", c.vote_count},
                         {"salience", c.salience}});
    }
    j["choices"] = choices;
  }
  if (!gold.spans.empty() || gold.choices.empty()) {
    Json spans = Json::array();
    for (const GoldSpan &s : gold.spans) {
      Json e = SpanToJson(s.span);
      e["vote_count"] = s.vote_count;
      e["salience"] = s.salience;
      spans.push_back(e);
    }
    j["spans"] = spans;
  }
  return j;
}

GoldLabel GoldLabelFromJson(const Json &j) {
  GoldLabel gold;
  try {
    gold.task_id = j.at("task_id").get<std::string>();
    gold.config.method =
        ParseConsensusMethod(j.value("method", std::string("majority")));
    gold.config.expected_raters = j.value("n", 3);
    gold.config.k = j.value("k", 0);
    for (const Json &s : j.value("spans", Json::array())) {
      gold.spans.push_back({SpanFromJson(s), s.value("vote_count", 1),
                            s.value("salience", 0.0)});
    }
    for (const Json &c : j.value("choices", Json::array())) {
      gold.choices.push_back({c.at("mention_id").get<std::string>(),
                              c.at("entity_id").get<std::string>(),
                              c.value("vote_count", 1),
                              c.value("salience", 0.0)});
    }
  } catch (const Json::exception &e) {
    throw Invalid(std::string("bad gold label: ") + e.what());
  }
  return gold;
}

SpanCheck CheckRaterSpans(const Document &doc, const std::vector<Span> &spans) {
  SpanCheck check;
  for (const Span &s : spans) {
    try {
      ValidateSpan(doc, s);
    } catch (const Error &e) {
      check.invalid = s;
      check.error = e.what();
      return check;
    }
  }
  std::vector<Span> sorted = spans;
  std::sort(sorted.begin(), sorted.end());
  for (const Span &s : sorted) {
    if (!check.spans.empty() && check.spans.back().field == s.field &&
        s.start < check.spans.back().end) {
      check.warnings.push_back("overlapping spans merged: " +
                               SpanText(check.spans.back()) + " and " +
                               SpanText(s));
      check.spans.back().end = std::max(check.spans.back().end, s.end);
      continue;
    }
    check.spans.push_back(s);
  }
  return check;
}

GoldLabel AggregateSpans(const std::vector<RaterSpanLabel> &labels,
                         const ConsensusConfig &cfg, const Document &doc) {
  cfg.Validate();
  if (labels.empty()) throw Invalid("aggregation needs at least one rater");
  std::vector<std::string> raters, tasks;
  for (const RaterSpanLabel &l : labels) {
    raters.push_back(l.rater_id);
    tasks.push_back(l.task_id);
  }
  CheckRaters(labels.front().task_id, raters, tasks, cfg);

  GoldLabel gold;
  gold.task_id = labels.front().task_id;
  gold.config = cfg;
  std::vector<std::vector<Span>> rater_spans;
  for (const RaterSpanLabel &l : labels) {
    SpanCheck check = CheckRaterSpans(doc, l.spans);
    if (check.invalid) {
      throw Invalid("rater " + l.rater_id + ": " + check.error);
    }
    for (std::string &w : check.warnings) {
      gold.warnings.push_back("rater " + l.rater_id + ": " + w);
    }
    rater_spans.push_back(std::move(check.spans));
  }

  const int threshold = cfg.Threshold();
  const double n = cfg.expected_raters;
  for (const Field &field : doc.fields) {
    std::vector<Token> tokens = Tokenize(field.text, field.name);
    if (tokens.empty()) continue;
    std::vector<int> votes(tokens.size(), 0);
    for (const std::vector<Span> &spans : rater_spans) {
      for (size_t t = 0; t < tokens.size(); ++t) {
        for (const Span &s : spans) {
          if (s.field == field.name && s.start < tokens[t].end &&
              tokens[t].start < s.end) {
            ++votes[t];
            break;
          }
        }
      }
    }
    size_t t = 0;
    while (t < tokens.size()) {
      if (votes[t] < threshold) {
        ++t;
        continue;
      }
      size_t first = t;
      int min_votes = votes[t];
      while (t < tokens.size() && votes[t] >= threshold) {
        min_votes = std::min(min_votes, votes[t]);
        ++t;
      }
      Span span{field.name, tokens[first].start, tokens[t - 1].end};
      gold.spans.push_back({span, min_votes, min_votes / n});
    }
  }
  std::sort(gold.spans.begin(), gold.spans.end(),
            [](const GoldSpan &a, const GoldSpan &b) { return a.span < b.span; });
  return gold;
}

GoldLabel AggregateChoices(const std::vector<RaterChoiceLabel> &labels,
                           const ConsensusConfig &cfg,
                           const std::vector<CandidateMention> &mentions) {
  cfg.Validate();
  if (labels.empty()) throw Invalid("aggregation needs at least one rater");
  std::vector<std::string> raters, tasks;
  for (const RaterChoiceLabel &l : labels) {
    raters.push_back(l.rater_id);
    tasks.push_back(l.task_id);
  }
  CheckRaters(labels.front().task_id, raters, tasks, cfg);

  std::map<std::string, const CandidateMention *> by_id;
  for (const CandidateMention &m : mentions) by_id[m.mention_id] = &m;

  // mention -> entity -> votes
  std::map<std::string, std::map<std::string, int>> votes;
  for (const RaterChoiceLabel &l : labels) {
    std::set<std::string> seen;
    for (const ChoiceSelection &s : l.selections) {
      auto it = by_id.find(s.mention_id);
      if (it == by_id.end()) {
        throw Invalid("rater " + l.rater_id + ": unknown mention " +
                      s.mention_id);
      }
      if (!seen.insert(s.mention_id).second) {
        throw Invalid("rater " + l.rater_id + ": several selections for " +
                      s.mention_id);
      }
      if (!s.entity_id) continue;
      const auto &cands = it->second->candidates;
      bool known = std::any_of(cands.begin(), cands.end(),
                               [&](const Candidate &c) {
                                 return c.entity_id == *s.entity_id;
                               });
      if (!known) {
        throw Invalid("rater " + l.rater_id + ": entity " + *s.entity_id +
                      " is not a candidate of " + s.mention_id);
      }
      ++votes[s.mention_id][*s.entity_id];
    }
  }

  GoldLabel gold;
  gold.task_id = labels.front().task_id;
  gold.config = cfg;
  const int threshold = cfg.Threshold();
  for (const CandidateMention &m : mentions) {
    auto vit = votes.find(m.mention_id);
    if (vit == votes.end()) continue;
    const Candidate *best = nullptr;
    int best_votes = 0;
    for (const Candidate &c : m.candidates) {
      auto e = vit->second.find(c.entity_id);
      if (e == vit->second.end() || e->second < threshold) continue;
      bool better = best == nullptr || e->second > best_votes ||
                    (e->second == best_votes &&
                     (c.prior > best->prior ||
                      (c.prior == best->prior && c.entity_id < best->entity_id)));
      if (better) {
        best = &c;
        best_votes = e->second;
      }
    }
    if (best == nullptr) continue;
    gold.choices.push_back({m.mention_id, best->entity_id, best_votes,
                            best_votes / double(cfg.expected_raters)});
  }
  return gold;
}

GoldLabel BroadcastMentions(const Document &doc, const GoldLabel &gold) {
  std::map<std::string, int> surface_votes;
  std::vector<std::string> order;
  for (const GoldSpan &g : gold.spans) {
    const Field *f = doc.FindField(g.span.field);
    if (f == nullptr) continue;
    std::string surface =
        NormalizeAlias(SubstrCodepoints(f->text, g.span.start, g.span.end));
    if (surface.empty()) continue;
    auto [it, inserted] = surface_votes.emplace(surface, g.vote_count);
    if (inserted) {
      order.push_back(surface);
    } else {
      it->second = std::max(it->second, g.vote_count);
    }
  }

  GoldLabel out = gold;
  if (order.empty()) return out;
  const double n = gold.config.expected_raters;
  std::map<std::string, std::vector<std::pair<int, int>>> taken;
  for (const GoldSpan &g : gold.spans) {
    taken[g.span.field].push_back({g.span.start, g.span.end});
  }
  auto overlaps = [&](const std::string &field, int start, int end) {
    for (const auto &[s, e] : taken[field]) {
      if (start < e && s < end) return true;
    }
    return false;
  };

  for (const Field &field : doc.fields) {
    if (field.text.empty()) continue;
    std::u32string source = DecodeUtf8(field.text);
    NormalizedText norm = NormalizeWithOffsets(source);
    std::vector<char> token_start(source.size() + 1, 0),
        token_end(source.size() + 1, 0);
    for (const Token &t : Tokenize(field.text)) {
      token_start[t.start] = 1;
      token_end[t.end] = 1;
    }
    for (const std::string &surface : order) {
      size_t pos = norm.text.find(surface);
      while (pos != std::string::npos) {
        int b = static_cast<int>(pos);
        int e = b + static_cast<int>(surface.size());
        pos = norm.text.find(surface, pos + 1);
        if (!norm.AlignedRange(b, e)) continue;
        int start = norm.units[norm.byte_unit[b]].orig_begin;
        int end = norm.units[norm.byte_unit[e - 1]].orig_end;
        if (!token_start[start] || !token_end[end]) continue;
        if (overlaps(field.name, start, end)) continue;
        int votes = surface_votes[surface];
        out.spans.push_back({{field.name, start, end}, votes, votes / n});
        taken[field.name].push_back({start, end});
      }
    }
  }
  std::sort(out.spans.begin(), out.spans.end(),
            [](const GoldSpan &a, const GoldSpan &b) { return a.span < b.span; });
  return out;
}

Prf ExactMatchF1(const std::vector<Span> &pred, const std::vector<Span> &gold) {
  std::set<Span> p(pred.begin(), pred.end());
  std::set<Span> g(gold.begin(), gold.end());
  Prf r;
  if (p.empty() && g.empty()) return {1.0, 1.0, 1.0};
  if (p.empty() || g.empty()) return r;
  size_t tp = 0;
  for (const Span &s : p) tp += g.count(s);
  r.precision = double(tp) / double(p.size());
  r.recall = double(tp) / double(g.size());
  if (tp > 0) r.f1 = 2 * r.precision * r.recall / (r.precision + r.recall);
  return r;
}

Json CalibrationReport::ToJson() const {
  Json j = {{"rater_id", rater_id},
            {"f1_vs_golden", f1_vs_golden},
            {"f1_vs_consensus", nullptr},
            {"golden_tasks", golden_tasks},
            {"consensus_tasks", consensus_tasks},
            {"flagged", flagged}};
  if (f1_vs_consensus) j["f1_vs_consensus"] = *f1_vs_consensus;
  return j;
}

CalibrationReport RaterCalibration(const std::string &rater_id,
                                   const SpanPairs &golden_results,
                                   const SpanPairs &consensus_results,
                                   const CalibrationThresholds &thresholds) {
  if (golden_results.empty()) {
    throw Error(ErrorCode::kFailedPrecondition,
                "rater " + rater_id + " has no golden results");
  }
  CalibrationReport report;
  report.rater_id = rater_id;
  double sum = 0.0;
  for (const auto &[rater, expert] : golden_results) {
    sum += ExactMatchF1(rater, expert).f1;
  }
  report.golden_tasks = static_cast<int>(golden_results.size());
  report.f1_vs_golden = sum / report.golden_tasks;
  report.flagged = report.f1_vs_golden < thresholds.golden;
  if (!consensus_results.empty()) {
    sum = 0.0;
    for (const auto &[rater, consensus] : consensus_results) {
      sum += ExactMatchF1(rater, consensus).f1;
    }
    report.consensus_tasks = static_cast<int>(consensus_results.size());
    report.f1_vs_consensus = sum / report.consensus_tasks;
    report.flagged =
        report.flagged || *report.f1_vs_consensus < thresholds.consensus;
  }
  return report;
}

}  // namespace entex
