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

// Python bindings. Records cross the boundary as plain dicts and lists with
// the same shape as the JSONL files.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <string>
#include <vector>

#include "entex/clustering.h"
#include "entex/document.h"
#include "entex/encoder.h"
#include "entex/error.h"
#include "entex/evaluation.h"
#include "entex/extraction.h"
#include "entex/kb_dictionary.h"
#include "entex/labeling.h"
#include "entex/linking.h"
#include "entex/matcher.h"
#include "entex/text.h"

namespace py = pybind11;

namespace entex {
namespace {

Json ToJson(const py::handle &obj) {
  // Never destroyed: must not outlive the interpreter.
  static auto *dumps = new py::object(py::module_::import("json").attr("dumps"));
  return Json::parse((*dumps)(obj).cast<std::string>());
}

py::object FromJson(const Json &j) {
  static auto *loads = new py::object(py::module_::import("json").attr("loads"));
  return (*loads)(j.dump());
}

std::vector<Span> SpansFrom(const py::handle &obj) {
  std::vector<Span> out;
  for (const Json &s : ToJson(obj)) out.push_back(SpanFromJson(s));
  return out;
}

std::vector<GraphEdge> EdgesFrom(
    const std::vector<std::tuple<int, int, double>> &edges) {
  std::vector<GraphEdge> out;
  out.reserve(edges.size());
  for (const auto &[a, b, w] : edges) out.push_back({a, b, w});
  return out;
}

class Extractor {
 public:
  Extractor(const std::string &heads_path, double threshold, int min_tokens,
            int max_tokens)
      : heads_(LoadHeads(heads_path)) {
    if (heads_.empty()) throw Error(ErrorCode::kInvalidArgument, "no heads");
    cfg_.threshold = threshold;
    cfg_.min_tokens = min_tokens;
    cfg_.max_tokens = max_tokens;
    cfg_.Validate();
    encoder_ = std::make_unique<Encoder>(heads_.front().encoder_spec);
  }

  py::dict Extract(const py::dict &doc) const {
    Document d = DocumentFromJson(ToJson(doc));
    ExtractionResult result;
    {
      py::gil_scoped_release release;
      result = MultiTaskExtract(d, heads_, cfg_, *encoder_);
    }
    py::dict out;
    for (const auto &[type, mentions] : result) {
      py::list rows;
      for (const ExtractedMention &m : mentions) {
        rows.append(FromJson(ExtractedMentionToJson(m)));
      }
      out[py::str(type)] = rows;
    }
    return out;
  }

  std::vector<std::string> EntityTypes() const {
    std::vector<std::string> out;
    for (const HeadParams &h : heads_) out.push_back(h.entity_type);
    return out;
  }

  uint64_t Invocations() const { return encoder_->invocations(); }

 private:
  std::vector<HeadParams> heads_;
  DecodeConfig cfg_;
  std::unique_ptr<Encoder> encoder_;
};

class Matcher {
 public:
  explicit Matcher(AliasTable table)
      : matcher_(CompiledMatcher::Compile(
            std::make_shared<const AliasTable>(std::move(table)))) {}

  py::list Find(const py::dict &doc, const std::string &policy) const {
    OverlapPolicy p;
    if (policy == "longest") {
      p = OverlapPolicy::kLongestPerStart;
    } else if (policy == "all") {
      p = OverlapPolicy::kAll;
    } else {
      throw Error(ErrorCode::kInvalidArgument,
                  "policy must be 'longest' or 'all'");
    }
    Document d = DocumentFromJson(ToJson(doc));
    std::vector<CandidateMention> found;
    {
      py::gil_scoped_release release;
      found = matcher_.FindCandidates(d, p);
    }
    py::list out;
    for (const CandidateMention &m : found) {
      out.append(FromJson(CandidateMentionToJson(m)));
    }
    return out;
  }

  size_t NumAliases() const { return matcher_.aliases().size(); }

 private:
  CompiledMatcher matcher_;
};

}  // namespace
}  // namespace entex

PYBIND11_MODULE(_entex, m) {
  using namespace entex;
  m.doc() = "Entity extraction, clustering, linking and label aggregation";

  static PyObject *error_type =
      py::exception<Error>(m, "EntexError", PyExc_ValueError).release().ptr();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error &e) {
      py::object exc = py::handle(error_type)(e.what());
      exc.attr("code") = ErrorCodeName(e.code());
      PyErr_SetObject(error_type, exc.ptr());
    }
  });

  m.def("normalize_alias", &NormalizeAlias, py::arg("text"));
  m.def(
      "tokenize",
      [](const std::string &text) {
        std::vector<std::tuple<int, int, std::string>> out;
        for (const Token &t : Tokenize(text)) out.emplace_back(t.start, t.end, t.text);
        return out;
      },
      py::arg("text"));
  m.def(
      "encode_text",
      [](const std::string &text, int dim, int ngram_n) {
        EncoderSpec spec;
        spec.dim = dim;
        spec.ngram_n = ngram_n;
        Encoder encoder(spec);
        TokenEncoding enc = encoder.EncodeText(text);
        std::vector<std::string> tokens;
        for (const Token &t : enc.tokens) tokens.push_back(t.text);
        return std::make_pair(tokens, Eigen::MatrixXd(enc.vectors));
      },
      py::arg("text"), py::arg("dim") = 64, py::arg("ngram_n") = 3);
  m.def(
      "decode_runs",
      [](const std::vector<double> &scores, double threshold, int min_tokens,
         int max_tokens) {
        DecodeConfig cfg{threshold, min_tokens, max_tokens};
        cfg.Validate();
        std::vector<std::pair<int, int>> out;
        for (const TokenRun &r : DecodeRuns(scores, cfg)) out.push_back({r.first, r.last});
        return out;
      },
      py::arg("scores"), py::arg("threshold") = 0.5, py::arg("min_tokens") = 1,
      py::arg("max_tokens") = 16);

  py::class_<Extractor>(m, "Extractor")
      .def(py::init<const std::string &, double, int, int>(),
           py::arg("heads_path"), py::arg("threshold") = 0.5,
           py::arg("min_tokens") = 1, py::arg("max_tokens") = 16)
      .def("extract", &Extractor::Extract, py::arg("doc"))
      .def_property_readonly("entity_types", &Extractor::EntityTypes)
      .def_property_readonly("encoder_invocations", &Extractor::Invocations);

  m.def(
      "louvain",
      [](int num_nodes, const std::vector<std::tuple<int, int, double>> &edges,
         double resolution) {
        LouvainOptions options;
        options.resolution = resolution;
        Partition p = Louvain(num_nodes, EdgesFrom(edges), options);
        return std::make_pair(p.community, p.modularity);
      },
      py::arg("num_nodes"), py::arg("edges"), py::arg("resolution") = 1.0);
  m.def(
      "modularity",
      [](int num_nodes, const std::vector<std::tuple<int, int, double>> &edges,
         const std::vector<int> &community, double resolution) {
        return Modularity(num_nodes, EdgesFrom(edges), community, resolution);
      },
      py::arg("num_nodes"), py::arg("edges"), py::arg("community"),
      py::arg("resolution") = 1.0);

  m.def(
      "build_alias_table",
      [](const py::list &records) {
        std::vector<DumpRecord> parsed;
        for (const Json &r : ToJson(records)) parsed.push_back(DumpRecordFromJson(r));
        BuildResult result = BuildAliasTable(parsed);
        return py::make_tuple(FromJson(result.table.ToJson()),
                              FromJson(result.stats.ToJson()));
      },
      py::arg("records"));

  py::class_<Matcher>(m, "Matcher")
      .def(py::init([](const py::dict &table) {
             return Matcher(AliasTable::FromJson(ToJson(table)));
           }),
           py::arg("table"))
      .def_static(
          "load", [](const std::string &path) { return Matcher(LoadTable(path)); },
          py::arg("path"))
      .def("find_candidates", &Matcher::Find, py::arg("doc"),
           py::arg("policy") = "longest")
      .def_property_readonly("num_aliases", &Matcher::NumAliases);

  m.def(
      "aggregate_spans",
      [](const py::list &labels, const py::dict &doc, const std::string &method,
         int k, int raters) {
        std::vector<RaterSpanLabel> parsed;
        for (const Json &l : ToJson(labels)) parsed.push_back(RaterSpanLabelFromJson(l));
        ConsensusConfig cfg;
        cfg.method = ParseConsensusMethod(method);
        cfg.k = k;
        cfg.expected_raters = raters;
        return FromJson(GoldLabelToJson(
            AggregateSpans(parsed, cfg, DocumentFromJson(ToJson(doc)))));
      },
      py::arg("labels"), py::arg("doc"), py::arg("method") = "majority",
      py::arg("k") = 0, py::arg("raters") = 3);
  m.def(
      "exact_match_f1",
      [](const py::list &pred, const py::list &gold) {
        Prf prf = ExactMatchF1(SpansFrom(pred), SpansFrom(gold));
        py::dict out;
        out["precision"] = prf.precision;
        out["recall"] = prf.recall;
        out["f1"] = prf.f1;
        return out;
      },
      py::arg("pred"), py::arg("gold"));
  m.def(
      "span_prf",
      [](const py::dict &pred, const py::dict &gold) {
        auto by_doc = [](const py::dict &d) {
          SpansByDoc out;
          for (const auto &[k, v] : d) out[k.cast<std::string>()] = SpansFrom(v);
          return out;
        };
        return FromJson(SpanPrf(by_doc(pred), by_doc(gold)).ToJson());
      },
      py::arg("pred"), py::arg("gold"));
  m.def(
      "resolve_scores",
      [](const std::vector<std::tuple<std::string, double, double>> &candidates,
         double nil_threshold) {
        std::vector<CandidateScore> scores;
        for (const auto &[id, prior, score] : candidates) {
          scores.push_back({id, prior, score});
        }
        Resolution r = ResolveScores(std::move(scores), nil_threshold);
        return std::make_pair(r.entity_id, r.score);
      },
      py::arg("candidates"), py::arg("nil_threshold"));
}
