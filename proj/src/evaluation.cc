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

#include "entex/evaluation.h"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "entex/encoder.h"
#include "entex/error.h"

namespace entex {

namespace {

double Ratio(int64_t num, int64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string SliceKey(const DocIndex &docs, SliceBy slice,
                     const std::string &doc_id) {
  if (slice == SliceBy::kNone) return "";
  auto it = docs.find(doc_id);
  if (it == docs.end() || it->second == nullptr) {
    throw Error(ErrorCode::kNotFound,
                "no document metadata for " + doc_id + " to slice by");
  }
  return slice == SliceBy::kLanguage ? it->second->language
                                     : DocTypeName(it->second->doc_type);
}

using TokenKey = std::pair<std::string, int>;

std::set<TokenKey> CoveredTokens(const Document *doc,
                                 const std::vector<Span> &spans) {
  std::set<TokenKey> out;
  if (doc == nullptr) {
    throw Error(ErrorCode::kNotFound, "token-level matching needs documents");
  }
  for (const Field &f : doc->fields) {
    std::vector<Token> tokens = Tokenize(f.text, f.name);
    for (size_t t = 0; t < tokens.size(); ++t) {
      for (const Span &s : spans) {
        if (s.field == f.name && s.start < tokens[t].end &&
            tokens[t].start < s.end) {
          out.insert({f.name, static_cast<int>(t)});
          break;
        }
      }
    }
  }
  return out;
}

template <typename T>
MetricRow CountMatches(const std::set<T> &p, const std::set<T> &g) {
  MetricRow row;
  for (const T &x : p) {
    if (g.count(x)) {
      ++row.tp;
    } else {
      ++row.fp;
    }
  }
  row.fn = static_cast<int64_t>(g.size()) - row.tp;
  return row;
}

}  // namespace

double MetricRow::Precision() const { return Ratio(tp, tp + fp); }
double MetricRow::Recall() const { return Ratio(tp, tp + fn); }
double MetricRow::F1() const {
  double p = Precision(), r = Recall();
  return p + r == 0.0 ? 0.0 : 2 * p * r / (p + r);
}
double MetricRow::Accuracy() const { return Ratio(correct, total); }

MetricRow &MetricRow::operator+=(const MetricRow &o) {
  docs += o.docs;
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  correct += o.correct;
  total += o.total;
  return *this;
}

SliceBy ParseSliceBy(std::string_view name) {
  if (name.empty() || name == "none") return SliceBy::kNone;
  if (name == "language") return SliceBy::kLanguage;
  if (name == "doc_type") return SliceBy::kDocType;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown slice attribute: " + std::string(name));
}

const char *SliceByName(SliceBy slice) {
  switch (slice) {
    case SliceBy::kNone:
      return "none";
    case SliceBy::kLanguage:
      return "language";
    case SliceBy::kDocType:
      return "doc_type";
  }
  return "?";
}

Json EvalReport::ToJson() const {
  bool prf = metric == "span_prf";
  auto row_json = [&](const MetricRow &r) {
    if (prf) {
      return Json{{"docs", r.docs},         {"tp", r.tp},
                  {"fp", r.fp},             {"fn", r.fn},
                  {"precision", r.Precision()}, {"recall", r.Recall()},
                  {"f1", r.F1()}};
    }
    return Json{{"docs", r.docs},
                {"correct", r.correct},
                {"total", r.total},
                {"accuracy", r.Accuracy()}};
  };
  Json j = {{"metric", metric},
            {"slice_by", SliceByName(slice)},
            {"overall", row_json(overall)},
            {"slices", Json::object()}};
  for (const auto &[key, row] : slices) j["slices"][key] = row_json(row);
  return j;
}

std::string EvalReport::ToText() const {
  bool prf = metric == "span_prf";
  std::vector<std::pair<std::string, const MetricRow *>> rows;
  for (const auto &[key, row] : slices) rows.push_back({key, &row});
  rows.push_back({"Overall", &overall});
  size_t width = 7;
  for (const auto &[key, row] : rows) width = std::max(width, key.size());

  std::ostringstream out;
  char buf[160];
  std::string head = slice == SliceBy::kNone ? "" : SliceByName(slice);
  if (prf) {
    std::snprintf(buf, sizeof(buf), "%-*s %8s %9s %9s %9s\n",
                  static_cast<int>(width), head.c_str(), "docs", "Precision",
                  "Recall", "F1");
  } else {
    std::snprintf(buf, sizeof(buf), "%-*s %8s %9s %9s\n",
                  static_cast<int>(width), head.c_str(), "docs", "mentions",
                  "Accuracy");
  }
  out << buf;
  for (const auto &[key, row] : rows) {
    if (prf) {
      std::snprintf(buf, sizeof(buf), "%-*s %8lld %9.4f %9.4f %9.4f\n",
                    static_cast<int>(width), key.c_str(),
                    static_cast<long long>(row->docs), row->Precision(),
                    row->Recall(), row->F1());
    } else {
      std::snprintf(buf, sizeof(buf), "%-*s %8lld %9lld %9.4f\n",
                    static_cast<int>(width), key.c_str(),
                    static_cast<long long>(row->docs),
                    static_cast<long long>(row->total), row->Accuracy());
    }
    out << buf;
  }
  return out.str();
}

EvalReport SpanPrf(const SpansByDoc &pred, const SpansByDoc &gold,
                   const DocIndex &docs, SliceBy slice, MatchLevel level) {
  for (const auto &[doc_id, spans] : pred) {
    if (!gold.count(doc_id)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "predicted document " + doc_id + " is not in the gold set");
    }
  }
  static const std::vector<Span> kEmpty;
  EvalReport report;
  report.metric = "span_prf";
  report.slice = slice;
  for (const auto &[doc_id, gold_spans] : gold) {
    auto pit = pred.find(doc_id);
    const std::vector<Span> &pred_spans = pit == pred.end() ? kEmpty : pit->second;
    MetricRow row;
    if (level == MatchLevel::kSpan) {
      row = CountMatches(std::set<Span>(pred_spans.begin(), pred_spans.end()),
                         std::set<Span>(gold_spans.begin(), gold_spans.end()));
    } else {
      auto dit = docs.find(doc_id);
      const Document *doc = dit == docs.end() ? nullptr : dit->second;
      row = CountMatches(CoveredTokens(doc, pred_spans),
                         CoveredTokens(doc, gold_spans));
    }
    row.docs = 1;
    report.overall += row;
    if (slice != SliceBy::kNone) {
      report.slices[SliceKey(docs, slice, doc_id)] += row;
    }
  }
  return report;
}

EvalReport LinkingAccuracy(const std::vector<LinkItem> &pred,
                           const std::vector<LinkItem> &gold,
                           const DocIndex &docs, SliceBy slice) {
  std::map<std::string, std::optional<std::string>> predicted;
  for (const LinkItem &p : pred) predicted[p.mention_id] = p.entity_id;
  EvalReport report;
  report.metric = "linking_accuracy";
  report.slice = slice;
  std::set<std::string> all_docs;
  std::map<std::string, std::set<std::string>> slice_docs;
  for (const LinkItem &g : gold) {
    MetricRow row;
    row.total = 1;
    auto it = predicted.find(g.mention_id);
    if (it != predicted.end() && it->second == g.entity_id) row.correct = 1;
    MetricRow counted = row;
    counted.docs = all_docs.insert(g.doc_id).second ? 1 : 0;
    report.overall += counted;
    if (slice != SliceBy::kNone) {
      std::string key = SliceKey(docs, slice, g.doc_id);
      row.docs = slice_docs[key].insert(g.doc_id).second ? 1 : 0;
      report.slices[key] += row;
    }
  }
  return report;
}

Json TaskRates::ToJson() const {
  return {{"tasks", tasks},
          {"all_extracted_correct_rate", all_extracted_correct_rate},
          {"all_correct_extracted_rate", all_correct_extracted_rate}};
}

TaskRates TaskAllCorrectRates(const EntitySetsByTask &pred,
                              const EntitySetsByTask &gold, int tolerance) {
  if (tolerance < 0) {
    throw Error(ErrorCode::kInvalidArgument, "tolerance must be >= 0");
  }
  static const std::set<std::string> kEmpty;
  TaskRates rates;
  int64_t precise = 0, complete = 0;
  for (const auto &[task, g] : gold) {
    auto it = pred.find(task);
    const std::set<std::string> &p = it == pred.end() ? kEmpty : it->second;
    int extra = 0, missing = 0;
    for (const std::string &e : p) extra += g.count(e) ? 0 : 1;
    for (const std::string &e : g) missing += p.count(e) ? 0 : 1;
    precise += extra <= tolerance;
    complete += missing <= tolerance;
    ++rates.tasks;
  }
  rates.all_extracted_correct_rate = Ratio(precise, rates.tasks);
  rates.all_correct_extracted_rate = Ratio(complete, rates.tasks);
  return rates;
}

}  // namespace entex
