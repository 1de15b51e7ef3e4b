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

#include "entex/pipeline.h"

#include <charconv>
#include <filesystem>
#include <fstream>

#include "entex/error.h"

namespace entex {

namespace {

std::string Trim(std::string_view s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T ParseNumber(const std::string &value, const std::string &where) {
  T out{};
  auto [ptr, ec] =
      std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw Error(ErrorCode::kParse, where + ": not a number: " + value);
  }
  return out;
}

}  // namespace

PipelineConfig PipelineConfig::Parse(std::istream &in,
                                     std::string_view source) {
  PipelineConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (size_t hash = line.find('#'); hash != std::string::npos) {
      line.resize(hash);
    }
    std::string trimmed = Trim(line);
    if (trimmed.empty()) continue;
    std::string where = std::string(source) + ":" + std::to_string(line_no);
    size_t eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kParse, where + ": expected key = value");
    }
    std::string key = Trim(std::string_view(trimmed).substr(0, eq));
    std::string value = Trim(std::string_view(trimmed).substr(eq + 1));
    std::map<std::string, std::string *> paths = {
        {"corpus", &cfg.corpus},
        {"dictionary", &cfg.dictionary},
        {"heads", &cfg.heads},
        {"linker", &cfg.linker},
        {"entity_embeddings", &cfg.entity_embeddings},
        {"siamese", &cfg.siamese},
        {"tasks", &cfg.tasks},
        {"event_log", &cfg.event_log},
        {"host", &cfg.host}};
    if (auto it = paths.find(key); it != paths.end()) {
      *it->second = value;
    } else if (key == "decode_threshold") {
      cfg.decode.threshold = ParseNumber<double>(value, where);
    } else if (key == "min_tokens") {
      cfg.decode.min_tokens = ParseNumber<int>(value, where);
    } else if (key == "max_tokens") {
      cfg.decode.max_tokens = ParseNumber<int>(value, where);
    } else if (key == "link_threshold") {
      cfg.link_threshold = ParseNumber<double>(value, where);
    } else if (key == "nil_threshold") {
      cfg.nil_threshold = ParseNumber<double>(value, where);
    } else if (key == "consensus_method") {
      cfg.consensus_method = ParseConsensusMethod(value);
    } else if (key == "consensus_k") {
      cfg.consensus_k = ParseNumber<int>(value, where);
    } else if (key == "golden_rate") {
      cfg.golden_rate = ParseNumber<double>(value, where);
    } else if (key == "raters_open") {
      cfg.raters_open = ParseNumber<int>(value, where);
    } else if (key == "raters_closed") {
      cfg.raters_closed = ParseNumber<int>(value, where);
    } else if (key == "port") {
      cfg.port = ParseNumber<int>(value, where);
    } else if (key == "seed") {
      cfg.seed = ParseNumber<uint64_t>(value, where);
    } else {
      throw Error(ErrorCode::kParse, where + ": unknown key " + key);
    }
  }
  cfg.Validate();
  return cfg;
}

PipelineConfig PipelineConfig::Load(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return Parse(in, path);
}

void PipelineConfig::Validate() const {
  decode.Validate();
  auto fail = [](const std::string &m) {
    throw Error(ErrorCode::kInvalidArgument, m);
  };
  if (!(golden_rate >= 0.0 && golden_rate < 1.0)) {
    fail("golden_rate must lie in [0, 1)");
  }
  if (raters_open < 1 || raters_closed < 1) fail("raters must be >= 1");
  if (port < 0 || port > 65535) fail("port out of range");
  if (nil_threshold > 1.0) fail("nil_threshold must be <= 1");
}

void PipelineConfig::CheckFiles() const {
  for (const std::string *p : {&corpus, &dictionary, &heads, &linker,
                               &entity_embeddings, &siamese, &tasks}) {
    if (!p->empty() && !std::filesystem::exists(*p)) {
      throw Error(ErrorCode::kNotFound, "configured file does not exist: " + *p);
    }
  }
}

Json PipelineConfig::ToJson() const {
  return {{"corpus", corpus},
          {"dictionary", dictionary},
          {"heads", heads},
          {"linker", linker},
          {"entity_embeddings", entity_embeddings},
          {"siamese", siamese},
          {"tasks", tasks},
          {"event_log", event_log},
          {"decode_threshold", decode.threshold},
          {"min_tokens", decode.min_tokens},
          {"max_tokens", decode.max_tokens},
          {"link_threshold", link_threshold},
          {"nil_threshold", nil_threshold},
          {"consensus_method", ConsensusMethodName(consensus_method)},
          {"consensus_k", consensus_k},
          {"golden_rate", golden_rate},
          {"raters_open", raters_open},
          {"raters_closed", raters_closed},
          {"host", host},
          {"port", port},
          {"seed", seed}};
}

std::vector<ExtractedMention> ExtractCorpus(const std::vector<Document> &docs,
                                            std::span<const HeadParams> heads,
                                            const DecodeConfig &cfg,
                                            const Encoder &encoder) {
  std::vector<ExtractedMention> out;
  for (const Document &doc : docs) {
    DocumentEncoding encoding = encoder.Encode(doc);
    for (const HeadParams &head : heads) {
      std::vector<ExtractedMention> found =
          ExtractWithHead(doc, encoding, head, cfg);
      out.insert(out.end(), std::make_move_iterator(found.begin()),
                 std::make_move_iterator(found.end()));
    }
  }
  return out;
}

ClusterOutput ClusterMentions(const std::vector<Mention> &mentions,
                              const SiameseParams &params,
                              double link_threshold, Blocking blocking,
                              const LouvainOptions &options) {
  ClusterOutput out;
  out.graph = BuildGraph(mentions, params, link_threshold, blocking);
  out.partition = Louvain(out.graph, options);
  out.entities = Canonicalize(out.partition, mentions);
  return out;
}

std::vector<LinkedMention> LinkCorpus(const std::vector<Document> &docs,
                                      const CompiledMatcher &matcher,
                                      const Encoder &encoder,
                                      const EntityEmbeddingStore &entities,
                                      const LinkerParams &params) {
  std::vector<LinkedMention> out;
  for (const Document &doc : docs) {
    std::vector<CandidateMention> candidates = matcher.FindCandidates(doc);
    if (candidates.empty()) continue;
    DocumentEncoding encoding = encoder.Encode(doc);
    for (CandidateMention &c : candidates) {
      const TokenEncoding *field = nullptr;
      for (const TokenEncoding &e : encoding) {
        if (e.field == c.span.field) field = &e;
      }
      Vector embedding = Pool(*field, c.span);
      Resolution r = Resolve(c, embedding, entities, params);
      out.push_back({std::move(c), std::move(r)});
    }
  }
  return out;
}

}  // namespace entex
