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

#include "entex/kb_dictionary.h"

#include <gtest/gtest.h>

#include <fstream>

#include "entex/error.h"
#include "entex/text.h"
#include "oracles.h"

namespace entex {
namespace {

TEST(ResolveRedirects, Examples) {
  std::set<std::string> pages = {"C"};
  auto r = ResolveRedirects({{"A", "B"}, {"B", "C"}}, pages);
  EXPECT_EQ(r.resolved.at("A"), "C");
  EXPECT_EQ(r.resolved.at("B"), "C");

  auto cyc = ResolveRedirects({{"A", "B"}, {"B", "A"}}, pages);
  EXPECT_TRUE(cyc.resolved.empty());
  ASSERT_EQ(cyc.cycles.size(), 1u);
  EXPECT_EQ(cyc.cycles[0], (std::vector<std::string>{"A", "B"}));

  auto dangling = ResolveRedirects({{"A", "X"}}, pages);
  EXPECT_TRUE(dangling.resolved.empty());
  EXPECT_EQ(dangling.dangling, (std::vector<std::string>{"A"}));
}

TEST(ResolveRedirects, ChainIntoCycleDroppedAndDepthCap) {
  std::set<std::string> pages = {"P"};
  auto r = ResolveRedirects({{"S", "A"}, {"A", "B"}, {"B", "A"}}, pages);
  EXPECT_TRUE(r.resolved.empty());
  EXPECT_EQ(r.in_cycle_chain, (std::vector<std::string>{"S"}));
  std::map<std::string, std::string> chain;
  for (int i = 0; i < 5; ++i) {
    chain["r" + std::to_string(i)] = i == 4 ? "P" : "r" + std::to_string(i + 1);
  }
  auto deep = ResolveRedirects(chain, pages, 3);
  EXPECT_EQ(deep.resolved.count("r4"), 1u);
  EXPECT_EQ(deep.resolved.count("r0"), 0u);
  EXPECT_FALSE(deep.depth_exceeded.empty());
}

TEST(BuildAliasTable, AnchorPriors) {
  std::vector<DumpRecord> recs = {
      PageRecord{"Q1", "Apple Inc"}, PageRecord{"Q2", "Apple (fruit)"},
      AnchorCountRecord{"apple", "Apple Inc", 30},
      AnchorCountRecord{"apple", "Apple (fruit)", 70}};
  AliasTable t = BuildAliasTable(recs).table;
  const auto *c = t.Find("apple");
  ASSERT_NE(c, nullptr);
  ASSERT_EQ(c->size(), 2u);
  EXPECT_EQ((*c)[0].entity_id, "Q2");
  EXPECT_DOUBLE_EQ((*c)[0].prior, 0.7);
  EXPECT_DOUBLE_EQ((*c)[1].prior, 0.3);
}

TEST(BuildAliasTable, StructuralCountOnlyWithoutAnchors) {
  std::vector<DumpRecord> recs = {
      PageRecord{"Q1", "Mercury"}, PageRecord{"Q2", "Freddie Mercury"},
      AnchorCountRecord{"Mercury", "Mercury", 9},
      AnchorCountRecord{"mercury", "Freddie Mercury", 3}};
  const auto *c = BuildAliasTable(recs).table.Find("mercury");
  ASSERT_NE(c, nullptr);
  ASSERT_EQ(c->size(), 2u);
  EXPECT_EQ((*c)[0].count, 9);
  EXPECT_EQ((*c)[1].count, 3);
  EXPECT_DOUBLE_EQ((*c)[0].prior, 0.75);
  const auto *title = BuildAliasTable(recs).table.Find("freddie mercury");
  ASSERT_NE(title, nullptr);
  EXPECT_EQ(title->front().count, 1);
}

TEST(BuildAliasTable, RedirectAlias) {
  std::vector<DumpRecord> recs = {PageRecord{"Q6279", "Joe Biden"},
                                  RedirectRecord{"Biden", "Joe Biden"}};
  AliasTable t = BuildAliasTable(recs).table;
  ASSERT_NE(t.Find("biden"), nullptr);
  ASSERT_NE(t.Find("joe biden"), nullptr);
  EXPECT_EQ(t.Find("biden")->front().entity_id, "Q6279");
  EXPECT_EQ(t.Find("joe biden")->front().entity_id, "Q6279");
  EXPECT_EQ(t.entities.count("Q6279"), 1u);
}

TEST(BuildAliasTable, DisambiguationUniform) {
  std::vector<DumpRecord> recs = {
      PageRecord{"Q1", "Mercury (planet)"}, PageRecord{"Q2", "Mercury (element)"},
      PageRecord{"Q3", "Mercury"},
      DisambiguationRecord{"Mercury", {"Mercury (planet)", "Mercury (element)"}}};
  BuildResult r = BuildAliasTable(recs);
  const auto *c = r.table.Find("mercury");
  ASSERT_NE(c, nullptr);
  ASSERT_EQ(c->size(), 2u);
  EXPECT_DOUBLE_EQ((*c)[0].prior, 0.5);
  EXPECT_DOUBLE_EQ((*c)[1].prior, 0.5);
  // The disambiguation page itself is not an entity.
  EXPECT_EQ(r.table.entities.count("Q3"), 0u);
}

TEST(BuildAliasTable, Cleanups) {
  std::vector<DumpRecord> recs = {
      PageRecord{"Q1", "Zebra"}, AnchorCountRecord{"2024", "Zebra", 4},
      AnchorCountRecord{"!!", "Zebra", 1},
      AnchorCountRecord{std::string(70, 'z'), "Zebra", 1}};
  BuildResult r = BuildAliasTable(recs);
  EXPECT_EQ(r.table.entries.size(), 1u);
  EXPECT_EQ(r.stats.aliases_dropped, 3);
  BuildOptions keep;
  keep.cleanup.drop_numeric_punct = false;
  keep.cleanup.max_alias_length = 0;
  EXPECT_EQ(BuildAliasTable(recs, keep).table.entries.size(), 4u);
  EXPECT_THROW(BuildAliasTable({}), Error);
}

TEST(BuildAliasTable, OrderIndependent) {
  std::vector<DumpRecord> recs = {
      PageRecord{"Q1", "Alpha"}, PageRecord{"Q2", "Beta"},
      RedirectRecord{"A", "Alpha"}, RedirectRecord{"B", "Beta"},
      RedirectRecord{"AB", "A"}, DisambiguationRecord{"Ab", {"Alpha", "Beta"}},
      AnchorCountRecord{"alpha", "Alpha", 3}, AnchorCountRecord{"ab", "Beta", 2}};
  AliasTable base = BuildAliasTable(recs).table;
  Rng rng(9);
  for (int i = 0; i < 20; ++i) {
    for (size_t j = recs.size() - 1; j > 0; --j) {
      std::swap(recs[j], recs[rng.Below(j + 1)]);
    }
    EXPECT_EQ(BuildAliasTable(recs).table, base);
  }
}

TEST(DumpRecord, JsonRoundTripAndErrors) {
  DumpRecord r = AnchorCountRecord{"apple", "Apple Inc", 30};
  Json j = DumpRecordToJson(r);
  EXPECT_EQ(j["kind"], "anchor_count");
  EXPECT_EQ(DumpRecordToJson(DumpRecordFromJson(j)), j);
  EXPECT_THROW(DumpRecordFromJson({{"kind", "page"}, {"id", "Q1"}}), Error);
  EXPECT_THROW(DumpRecordFromJson({{"kind", "anchor_count"},
                                   {"alias", "a"},
                                   {"entity_title", "A"},
                                   {"count", 0}}),
               Error);
  EXPECT_THROW(DumpRecordFromJson({{"kind", "category"}}), Error);
}

TEST(SaveLoad, RoundTripAndCorruption) {
  auto dir = oracle::TempDir("kb");
  std::vector<DumpRecord> recs = {PageRecord{"Q1", "Caf\xC3\xA9 Noir"},
                                  RedirectRecord{"Noir", "Caf\xC3\xA9 Noir"}};
  AliasTable t = BuildAliasTable(recs).table;
  std::string path = (dir / "dict.jsonl").string();
  SaveTable(path, t);
  EXPECT_EQ(LoadTable(path), t);

  std::string contents = SerializeTable(t);
  EXPECT_THROW(DeserializeTable(contents.substr(0, contents.size() / 2)),
               Error);
  try {
    DeserializeTable(contents.substr(0, contents.size() / 2));
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kCorrupt);
  }

  // Priors summing to 0.9 with a valid checksum.
  Json j = t.ToJson();
  j["aliases"]["noir"][0]["prior"] = 0.9;
  std::string body = j.dump();
  std::string bad = body + "\n#checksum fnv1a64:" + Hex64(Fnv1a64(body)) + "\n";
  try {
    DeserializeTable(bad);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kCorrupt);
  }

  j = t.ToJson();
  j["version"] = "entex-aliases/99";
  body = j.dump();
  try {
    DeserializeTable(body + "\n#checksum fnv1a64:" + Hex64(Fnv1a64(body)));
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), ErrorCode::kFailedPrecondition);
  }
}

TEST(BuildAliasTable, FixedPointOnRandomDumps) {
  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<DumpRecord> recs;
    int pages = 5 + static_cast<int>(rng.Below(10));
    for (int i = 0; i < pages; ++i) {
      recs.push_back(PageRecord{"Q" + std::to_string(i), "P" + std::to_string(i)});
    }
    for (int i = 0; i < 30; ++i) {
      std::string to = rng.Bernoulli(0.5) ? "P" + std::to_string(rng.Below(pages + 3))
                                          : "R" + std::to_string(rng.Below(30));
      recs.push_back(RedirectRecord{"R" + std::to_string(i), to});
      recs.push_back(AnchorCountRecord{"a" + std::to_string(rng.Below(8)),
                                       "P" + std::to_string(rng.Below(pages)),
                                       1 + (int64_t)rng.Below(9)});
    }
    BuildResult r = BuildAliasTable(recs);
    std::set<std::string> sources;
    for (const auto &rec : recs) {
      if (auto *rd = std::get_if<RedirectRecord>(&rec)) sources.insert(rd->from_title);
    }
    for (const auto &[src, target] : r.redirects.resolved) {
      EXPECT_EQ(sources.count(target), 0u) << target;
    }
    for (const auto &[alias, cands] : r.table.entries) {
      double sum = 0;
      for (const Candidate &c : cands) sum += c.prior;
      EXPECT_NEAR(sum, 1.0, 1e-9);
    }
  }
}

}  // namespace
}  // namespace entex
