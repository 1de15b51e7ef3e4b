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

// Batch stages as file-free transforms, plus the shared configuration.

#ifndef ENTEX_PIPELINE_H_
#define ENTEX_PIPELINE_H_

#include <istream>
#include <map>
#include <string>
#include <vector>

#include "entex/clustering.h"
#include "entex/document.h"
#include "entex/encoder.h"
#include "entex/extraction.h"
#include "entex/labeling.h"
#include "entex/linking.h"
#include "entex/matcher.h"

namespace entex {

// Text config, one `key = value` per line, '#' starts a comment. Unknown
// keys are rejected.
//
//   corpus, dictionary, heads, linker, entity_embeddings, siamese,
//   tasks, event_log                          paths
//   decode_threshold, min_tokens, max_tokens  span decoding
//   link_threshold                            mention graph edges
//   nil_threshold                             overrides the linker file
//   consensus_method, consensus_k             default consensus
//   golden_rate, raters_open, raters_closed   labeling service
//   host, port, seed
struct PipelineConfig {
  std::string corpus;
  std::string dictionary;
  std::string heads;
  std::string linker;
  std::string entity_embeddings;
  std::string siamese;
  std::string tasks;
  std::string event_log;

  DecodeConfig decode;
  double link_threshold = 0.8;
  double nil_threshold = -1.0;  // < 0 keeps the linker's value
  ConsensusMethod consensus_method = ConsensusMethod::kMajority;
  int consensus_k = 2;
  double golden_rate = 0.1;
  int raters_open = 3;
  int raters_closed = 5;
  std::string host = "127.0.0.1";
  int port = 8080;
  uint64_t seed = 17;

  static PipelineConfig Parse(std::istream &in, std::string_view source);
  static PipelineConfig Load(const std::string &path);
  void Validate() const;
  // Throws Error(kNotFound) naming the first configured path that does not
  // exist.
  void CheckFiles() const;
  Json ToJson() const;
};

// Encodes each document once and applies every head. Output order is
// document order, then head order, then position.
std::vector<ExtractedMention> ExtractCorpus(const std::vector<Document> &docs,
                                            std::span<const HeadParams> heads,
                                            const DecodeConfig &cfg,
                                            const Encoder &encoder);

struct ClusterOutput {
  MentionGraph graph;
  Partition partition;
  std::vector<OpenEntity> entities;
};

ClusterOutput ClusterMentions(const std::vector<Mention> &mentions,
                              const SiameseParams &params,
                              double link_threshold, Blocking blocking,
                              const LouvainOptions &options = {});

struct LinkedMention {
  CandidateMention mention;
  Resolution resolution;
};

// Candidate generation followed by resolution. Mention embeddings are pooled
// from one encoding per document.
std::vector<LinkedMention> LinkCorpus(const std::vector<Document> &docs,
                                      const CompiledMatcher &matcher,
                                      const Encoder &encoder,
                                      const EntityEmbeddingStore &entities,
                                      const LinkerParams &params);

}  // namespace entex

#endif  // ENTEX_PIPELINE_H_
