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

// Deterministic synthetic corpus: an entity registry, a knowledge-base dump
// describing it, documents that mention the entities, and gold annotations.

#ifndef ENTEX_SYNTH_H_
#define ENTEX_SYNTH_H_

#include <map>
#include <string>
#include <vector>

#include "entex/document.h"
#include "entex/kb_dictionary.h"

namespace entex {

inline const std::vector<std::string> &SynthEntityTypes() {
  static const std::vector<std::string> kTypes = {
      "brand", "product", "person", "location",
      "organization", "event", "category"};
  return kTypes;
}

struct SynthConfig {
  int num_docs = 500;
  int num_entities = 80;
  uint64_t seed = 7;
};

struct SynthEntity {
  std::string id;
  std::string title;
  std::string type;
  std::string short_name;  // first word, shared by some entities
  std::vector<std::string> redirects;
  std::string description;
};

struct SynthMention {
  std::string doc_id;
  Span span;
  std::string surface;
  std::string entity_id;
  std::string entity_type;

  // {doc_id, mention_id, field, start, end, surface, entity_id, entity_type}
  Json ToJson() const;
  static SynthMention FromJson(const Json &j);
};

struct SynthCorpus {
  std::vector<SynthEntity> entities;
  std::vector<Document> docs;
  std::vector<SynthMention> gold;  // document order, then position
  std::vector<DumpRecord> dump;

  // entity id -> description
  std::map<std::string, std::string> EntityTexts() const;
};

SynthCorpus GenerateCorpus(const SynthConfig &cfg);

}  // namespace entex

#endif  // ENTEX_SYNTH_H_
