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

#include <gtest/gtest.h>

#include <sstream>

#include "entex/error.h"
#include "entex/kb_dictionary.h"
#include "oracles.h"

namespace entex {
namespace {

std::string DataPath(const std::string &name) {
  return std::string(ENTEX_SOURCE_DIR) + "/data/" + name;
}

std::vector<Document> FirstDocs(size_t n) {
  auto docs = LoadDocuments(DataPath("docs.jsonl"));
  docs.resize(std::min(n, docs.size()));
  return docs;
}

TEST(PipelineConfig, Parse) {
  std::istringstream in(R"(# sample
corpus = data/docs.jsonl
heads = data/heads.json   # trailing comment
decode_threshold = 0.6
link_threshold = 0.75
consensus_method = and
golden_rate = 0.2
raters_closed = 7
port = 9000
seed = 99
)");
  PipelineConfig c = PipelineConfig::Parse(in, "sample.conf");
  EXPECT_EQ(c.corpus, "data/docs.jsonl");
  EXPECT_EQ(c.heads, "data/heads.json");
  EXPECT_EQ(c.decode.threshold, 0.6);
  EXPECT_EQ(c.link_threshold, 0.75);
  EXPECT_EQ(c.consensus_method, ConsensusMethod::kAnd);
  EXPECT_EQ(c.golden_rate, 0.2);
  EXPECT_EQ(c.raters_closed, 7);
  EXPECT_EQ(c.port, 9000);
  EXPECT_EQ(c.seed, 99u);
}

TEST(PipelineConfig, Defaults) {
  std::istringstream in("");
  PipelineConfig c = PipelineConfig::Parse(in, "empty");
  EXPECT_EQ(c.link_threshold, 0.8);
  EXPECT_EQ(c.golden_rate, 0.1);
  EXPECT_EQ(c.raters_open, 3);
  EXPECT_EQ(c.raters_closed, 5);
}

TEST(PipelineConfig, Errors) {
  auto parse = [](const std::string &text) {
    std::istringstream in(text);
    return PipelineConfig::Parse(in, "t.conf");
  };
  try {
    parse("corpus = a\ncolour = blue\n");
    FAIL();
  } catch (const Error &e) {
    EXPECT_NE(std::string(e.what()).find("t.conf:2"), std::string::npos);
  }
  EXPECT_THROW(parse("just words"), Error);
  EXPECT_THROW(parse("port = eighty"), Error);
  EXPECT_THROW(parse("consensus_method = most"), Error);
  PipelineConfig c = parse("corpus = /nonexistent/docs.jsonl");
  try {
    c.CheckFiles();
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotFound);
  }
}

TEST(ExtractCorpus, EncodesOncePerDocumentAndMatchesPerDocPath) {
  auto docs = FirstDocs(25);
  auto heads = LoadHeads(DataPath("heads.json"));
  Encoder encoder(heads.front().encoder_spec);
  DecodeConfig cfg;
  auto all = ExtractCorpus(docs, heads, cfg, encoder);
  EXPECT_EQ(encoder.invocations(), docs.size());
  EXPECT_FALSE(all.empty());

  std::vector<ExtractedMention> expect;
  for (const Document &d : docs) {
    DocumentEncoding enc = encoder.Encode(d);
    for (const HeadParams &h : heads) {
      for (auto &m : ExtractWithHead(d, enc, h, cfg)) expect.push_back(m);
    }
  }
  ASSERT_EQ(all.size(), expect.size());
  for (size_t i = 0; i < all.size(); ++i) {
    EXPECT_EQ(all[i].entity_type, expect[i].entity_type);
    EXPECT_EQ(all[i].mention.Id(), expect[i].mention.Id());
    EXPECT_EQ(all[i].score, expect[i].score);
    EXPECT_EQ(all[i].mention.embedding, expect[i].mention.embedding);
  }
}

TEST(ClusterMentions, DeterministicAndCoversEveryMention) {
  auto docs = FirstDocs(60);
  auto heads = LoadHeads(DataPath("heads.json"));
  Encoder encoder(heads.front().encoder_spec);
  std::vector<Mention> mentions;
  for (auto &m : ExtractCorpus(docs, heads, {}, encoder)) {
    if (m.entity_type == "brand") mentions.push_back(m.mention);
  }
  ASSERT_FALSE(mentions.empty());
  SiameseParams sp = LoadSiamese(DataPath("siamese.json"));
  ClusterOutput a = ClusterMentions(mentions, sp, 0.8, Blocking::kNormalizedSurface);
  ClusterOutput b = ClusterMentions(mentions, sp, 0.8, Blocking::kNormalizedSurface);
  ASSERT_EQ(a.entities.size(), b.entities.size());
  size_t covered = 0;
  for (size_t i = 0; i < a.entities.size(); ++i) {
    EXPECT_EQ(OpenEntityToJson(a.entities[i], mentions),
              OpenEntityToJson(b.entities[i], mentions));
    covered += a.entities[i].members.size();
  }
  EXPECT_EQ(covered, mentions.size());
}

TEST(LinkCorpus, MatchesManualComposition) {
  auto docs = FirstDocs(40);
  CompiledMatcher matcher =
      CompiledMatcher::Compile(LoadTable(DataPath("dictionary.jsonl")));
  EntityEmbeddingStore entities =
      LoadEntityEmbeddings(DataPath("entity_embeddings.jsonl"));
  LinkerParams params = LoadLinker(DataPath("linker.json"));
  Encoder encoder;
  auto linked = LinkCorpus(docs, matcher, encoder, entities, params);

  size_t i = 0;
  for (const Document &d : docs) {
    DocumentEncoding enc = encoder.Encode(d);
    for (const CandidateMention &c : matcher.FindCandidates(d)) {
      ASSERT_LT(i, linked.size());
      EXPECT_EQ(linked[i].mention, c);
      size_t f = 0;
      while (enc[f].field != c.span.field) ++f;
      Resolution r = Resolve(c, Pool(enc[f], c.span), entities, params);
      EXPECT_EQ(linked[i].resolution.entity_id, r.entity_id);
      EXPECT_EQ(linked[i].resolution.score, r.score);
      ++i;
    }
  }
  EXPECT_EQ(i, linked.size());
}

}  // namespace
}  // namespace entex
