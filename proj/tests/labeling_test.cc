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

#include <gtest/gtest.h>

#include <set>

#include "entex/encoder.h"
#include "entex/error.h"
#include "entex/random.h"
#include "entex/text.h"

namespace entex {
namespace {

Document Doc(const std::string &body, const std::string &title = "") {
  Document d;
  d.id = "d1";
  d.language = "en";
  if (!title.empty()) d.fields.push_back({"title", title});
  d.fields.push_back({"body", body});
  return d;
}

// Span covering tokens [a, b] of the body.
Span Tok(const Document &doc, int a, int b) {
  auto t = Tokenize(doc.FindField("body")->text, "body");
  return {"body", t[a].start, t[b].end};
}

std::vector<RaterSpanLabel> Raters(
    const Document &doc, const std::vector<std::vector<int>> &token_sets) {
  std::vector<RaterSpanLabel> out;
  for (size_t r = 0; r < token_sets.size(); ++r) {
    RaterSpanLabel l{"t1", "r" + std::to_string(r), {}};
    for (int t : token_sets[r]) l.spans.push_back(Tok(doc, t, t));
    out.push_back(l);
  }
  return out;
}

std::set<int> KeptTokens(const Document &doc, const GoldLabel &g) {
  auto toks = Tokenize(doc.FindField("body")->text, "body");
  std::set<int> out;
  for (const GoldSpan &s : g.spans) {
    for (size_t i = 0; i < toks.size(); ++i) {
      if (toks[i].start >= s.span.start && toks[i].end <= s.span.end) {
        out.insert(i);
      }
    }
  }
  return out;
}

ConsensusConfig Cfg(ConsensusMethod m, int n = 3, int k = 0) {
  ConsensusConfig c;
  c.method = m;
  c.expected_raters = n;
  c.k = k;
  return c;
}

TEST(ConsensusConfig, Thresholds) {
  EXPECT_EQ(Cfg(ConsensusMethod::kAnd).Threshold(), 3);
  EXPECT_EQ(Cfg(ConsensusMethod::kOr).Threshold(), 1);
  EXPECT_EQ(Cfg(ConsensusMethod::kMajority).Threshold(), 2);
  EXPECT_EQ(Cfg(ConsensusMethod::kMajority, 4).Threshold(), 3);
  EXPECT_EQ(Cfg(ConsensusMethod::kKOfN, 5, 2).Threshold(), 2);
  EXPECT_THROW(Cfg(ConsensusMethod::kKOfN, 5, 6).Validate(), Error);
  EXPECT_THROW(ParseConsensusMethod("most"), Error);
  EXPECT_EQ(ParseConsensusMethod("k_of_n"), ConsensusMethod::kKOfN);
}

TEST(AggregateSpans, ThreeRaterExample) {
  Document doc = Doc("a b c d e");
  auto labels = Raters(doc, {{1, 2}, {2, 3}, {2}});
  EXPECT_EQ(KeptTokens(doc, AggregateSpans(labels, Cfg(ConsensusMethod::kAnd), doc)),
            (std::set<int>{2}));
  GoldLabel orr = AggregateSpans(labels, Cfg(ConsensusMethod::kOr), doc);
  EXPECT_EQ(KeptTokens(doc, orr), (std::set<int>{1, 2, 3}));
  ASSERT_EQ(orr.spans.size(), 1u);
  EXPECT_EQ(orr.spans[0].span, Tok(doc, 1, 3));
  EXPECT_EQ(orr.spans[0].vote_count, 1);  // min over tokens
  GoldLabel maj = AggregateSpans(labels, Cfg(ConsensusMethod::kMajority), doc);
  ASSERT_EQ(maj.spans.size(), 1u);
  EXPECT_EQ(maj.spans[0].span, Tok(doc, 2, 2));
  EXPECT_EQ(maj.spans[0].vote_count, 3);
  EXPECT_DOUBLE_EQ(maj.spans[0].salience, 1.0);
}

TEST(AggregateSpans, SingleRaterUnchanged) {
  Document doc = Doc("red shoes and blue hats today");
  RaterSpanLabel l{"t1", "r0", {Tok(doc, 0, 1), Tok(doc, 3, 4)}};
  for (auto m : {ConsensusMethod::kAnd, ConsensusMethod::kOr,
                 ConsensusMethod::kMajority}) {
    EXPECT_EQ(AggregateSpans({l}, Cfg(m, 1), doc).SpanList(), l.spans);
  }
}

TEST(AggregateSpans, Errors) {
  Document doc = Doc("a b c");
  auto labels = Raters(doc, {{0}, {1}});
  labels[1].task_id = "t2";
  EXPECT_THROW(AggregateSpans(labels, Cfg(ConsensusMethod::kOr), doc), Error);
  labels = Raters(doc, {{0}, {1}, {2}, {0}});
  EXPECT_THROW(AggregateSpans(labels, Cfg(ConsensusMethod::kOr), doc), Error);
  labels = Raters(doc, {{0}});
  labels[0].spans.push_back({"body", 3, 99});
  EXPECT_THROW(AggregateSpans(labels, Cfg(ConsensusMethod::kOr), doc), Error);
  EXPECT_THROW(AggregateSpans({}, Cfg(ConsensusMethod::kOr), doc), Error);
}

TEST(AggregateSpans, OverlappingRaterSpansMergedWithWarning) {
  Document doc = Doc("a b c d");
  RaterSpanLabel l{"t1", "r0", {Tok(doc, 0, 1), Tok(doc, 1, 2)}};
  GoldLabel g = AggregateSpans({l}, Cfg(ConsensusMethod::kOr, 1), doc);
  ASSERT_EQ(g.spans.size(), 1u);
  EXPECT_EQ(g.spans[0].span, Tok(doc, 0, 2));
  EXPECT_EQ(g.warnings.size(), 1u);
}

TEST(AggregateSpans, ContainmentAndVoteOracle) {
  Rng rng(11);
  Document doc = Doc("w0 w1 w2 w3 w4 w5 w6 w7 w8 w9 w10 w11");
  for (int trial = 0; trial < 300; ++trial) {
    int n = 1 + static_cast<int>(rng.Below(5));
    std::vector<std::vector<int>> sets(n);
    std::vector<int> votes(12, 0);
    for (auto &s : sets) {
      for (int t = 0; t < 12; ++t) {
        if (rng.Bernoulli(0.4)) s.push_back(t), ++votes[t];
      }
    }
    auto labels = Raters(doc, sets);
    auto a = KeptTokens(doc, AggregateSpans(labels, Cfg(ConsensusMethod::kAnd, n), doc));
    auto m = KeptTokens(doc, AggregateSpans(labels, Cfg(ConsensusMethod::kMajority, n), doc));
    auto o = KeptTokens(doc, AggregateSpans(labels, Cfg(ConsensusMethod::kOr, n), doc));
    EXPECT_TRUE(std::includes(m.begin(), m.end(), a.begin(), a.end()));
    EXPECT_TRUE(std::includes(o.begin(), o.end(), m.begin(), m.end()));
    std::set<int> expect;
    for (int t = 0; t < 12; ++t) {
      if (votes[t] >= n / 2 + 1) expect.insert(t);
    }
    EXPECT_EQ(m, expect);
  }
}

TEST(AggregateSpans, IdenticalRatersReproduceLabel) {
  Document doc = Doc("one two three four five six seven");
  std::vector<Span> spans = {Tok(doc, 0, 1), Tok(doc, 3, 3), Tok(doc, 5, 6)};
  std::vector<RaterSpanLabel> labels;
  for (int r = 0; r < 3; ++r) labels.push_back({"t1", "r" + std::to_string(r), spans});
  for (auto m : {ConsensusMethod::kAnd, ConsensusMethod::kOr,
                 ConsensusMethod::kMajority}) {
    EXPECT_EQ(AggregateSpans(labels, Cfg(m), doc).SpanList(), spans);
  }
}

std::vector<CandidateMention> TwoCandidates(double p1, double p2) {
  CandidateMention m;
  m.mention_id = "d1:body:0-4";
  m.doc_id = "d1";
  m.span = {"body", 0, 4};
  m.candidates = {{"e1", "E1", p1, 7}, {"e2", "E2", p2, 3}};
  return {m};
}

std::vector<RaterChoiceLabel> Choices(const std::vector<std::optional<std::string>> &picks) {
  std::vector<RaterChoiceLabel> out;
  for (size_t r = 0; r < picks.size(); ++r) {
    out.push_back({"t1", "r" + std::to_string(r), {{"d1:body:0-4", picks[r]}}});
  }
  return out;
}

TEST(AggregateChoices, TwoOfFive) {
  auto cfg = Cfg(ConsensusMethod::kKOfN, 5, 2);
  auto mentions = TwoCandidates(0.6, 0.4);
  GoldLabel g = AggregateChoices(
      Choices({"e1", "e1", "e2", std::nullopt, std::nullopt}), cfg, mentions);
  ASSERT_EQ(g.choices.size(), 1u);
  EXPECT_EQ(g.choices[0].entity_id, "e1");
  EXPECT_EQ(g.choices[0].vote_count, 2);
  EXPECT_DOUBLE_EQ(g.choices[0].salience, 0.4);

  g = AggregateChoices(Choices({"e1", "e2", std::nullopt, std::nullopt, std::nullopt}),
                       cfg, mentions);
  EXPECT_TRUE(g.choices.empty());
}

TEST(AggregateChoices, TieBrokenByPrior) {
  auto cfg = Cfg(ConsensusMethod::kKOfN, 5, 2);
  auto picks = Choices({"e2", "e1", "e2", "e1", std::nullopt});
  EXPECT_EQ(AggregateChoices(picks, cfg, TwoCandidates(0.7, 0.3)).choices[0].entity_id, "e1");
  EXPECT_EQ(AggregateChoices(picks, cfg, TwoCandidates(0.3, 0.7)).choices[0].entity_id, "e2");
}

TEST(AggregateChoices, NoneOfTheseNeverGold) {
  auto cfg = Cfg(ConsensusMethod::kKOfN, 5, 2);
  auto picks = Choices({std::nullopt, std::nullopt, std::nullopt, std::nullopt, "e1"});
  EXPECT_TRUE(AggregateChoices(picks, cfg, TwoCandidates(0.5, 0.5)).choices.empty());
}

TEST(AggregateChoices, Errors) {
  auto cfg = Cfg(ConsensusMethod::kKOfN, 5, 2);
  auto mentions = TwoCandidates(0.5, 0.5);
  EXPECT_THROW(AggregateChoices(Choices({"e9"}), cfg, mentions), Error);
  auto picks = Choices({"e1"});
  picks[0].selections.push_back({"d1:body:0-4", "e2"});
  EXPECT_THROW(AggregateChoices(picks, cfg, mentions), Error);
  picks = Choices({"e1"});
  picks[0].selections[0].mention_id = "nope";
  EXPECT_THROW(AggregateChoices(picks, cfg, mentions), Error);
}

GoldLabel OpenGold(const std::vector<Span> &spans, int votes = 2) {
  GoldLabel g;
  g.task_id = "t1";
  for (const Span &s : spans) g.spans.push_back({s, votes, votes / 3.0});
  return g;
}

TEST(BroadcastMentions, AddsOtherOccurrences) {
  Document doc = Doc("red Shoes on sale, more shoes here", "Shoes today");
  GoldLabel g = BroadcastMentions(doc, OpenGold({{"body", 4, 9}}, 3));
  std::vector<Span> expect = {{"body", 4, 9}, {"body", 24, 29}, {"title", 0, 5}};
  EXPECT_EQ(g.SpanList(), expect);
  for (const GoldSpan &s : g.spans) EXPECT_EQ(s.vote_count, 3);
}

TEST(BroadcastMentions, RespectsTokenBoundaries) {
  Document doc = Doc("art start artful art");
  GoldLabel g = BroadcastMentions(doc, OpenGold({{"body", 0, 3}}));
  std::vector<Span> expect = {{"body", 0, 3}, {"body", 17, 20}};
  EXPECT_EQ(g.SpanList(), expect);
}

TEST(BroadcastMentions, IdempotentAndNeverRemoves) {
  Rng rng(12);
  const std::vector<std::string> words = {"shoe", "red", "shoe", "big", "hat",
                                          "red", "hat"};
  for (int trial = 0; trial < 200; ++trial) {
    std::string body;
    int len = 3 + static_cast<int>(rng.Below(10));
    for (int i = 0; i < len; ++i) {
      if (i) body += ' ';
      body += words[rng.Below(words.size())];
    }
    Document doc = Doc(body);
    auto toks = Tokenize(body, "body");
    std::vector<Span> spans;
    for (size_t i = 0; i < toks.size(); i += 2) {
      if (rng.Bernoulli(0.3)) spans.push_back({"body", toks[i].start, toks[i].end});
    }
    GoldLabel once = BroadcastMentions(doc, OpenGold(spans));
    GoldLabel twice = BroadcastMentions(doc, once);
    EXPECT_EQ(once.spans, twice.spans);
    auto list = once.SpanList();
    std::set<Span> out(list.begin(), list.end());
    for (const Span &s : spans) EXPECT_TRUE(out.count(s));
  }
}

TEST(ExactMatchF1, Examples) {
  std::vector<Span> a = {{"b", 0, 2}, {"b", 3, 4}};
  std::vector<Span> b = {{"b", 0, 2}, {"b", 5, 6}};
  Prf r = ExactMatchF1(a, b);
  EXPECT_DOUBLE_EQ(r.precision, 0.5);
  EXPECT_DOUBLE_EQ(r.recall, 0.5);
  EXPECT_DOUBLE_EQ(r.f1, 0.5);
  EXPECT_EQ(ExactMatchF1(a, a).f1, 1.0);
  EXPECT_EQ(ExactMatchF1(a, {{"b", 7, 8}}).f1, 0.0);
  EXPECT_EQ(ExactMatchF1({}, {}).f1, 1.0);
  EXPECT_EQ(ExactMatchF1({}, a).f1, 0.0);
  EXPECT_EQ(ExactMatchF1(a, {}).precision, 0.0);
}

TEST(ExactMatchF1, PrecisionRecallDuality) {
  Rng rng(13);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<Span> a, b;
    for (int i = 0; i < 6; ++i) {
      if (rng.Bernoulli(0.5)) a.push_back({"f", i, i + 1});
      if (rng.Bernoulli(0.5)) b.push_back({"f", i, i + 1});
    }
    Prf ab = ExactMatchF1(a, b), ba = ExactMatchF1(b, a);
    EXPECT_EQ(ab.precision, ba.recall);
    EXPECT_EQ(ab.f1, ba.f1);
  }
}

TEST(RaterCalibration, Examples) {
  std::vector<Span> e = {{"b", 0, 2}};
  auto perfect = RaterCalibration("r1", {{e, e}, {e, e}}, {});
  EXPECT_EQ(perfect.f1_vs_golden, 1.0);
  EXPECT_FALSE(perfect.flagged);
  EXPECT_FALSE(perfect.f1_vs_consensus);

  auto empty = RaterCalibration("r2", {{{}, e}}, {});
  EXPECT_EQ(empty.f1_vs_golden, 0.0);
  EXPECT_TRUE(empty.flagged);

  auto partial = RaterCalibration("r3", {{{{"b", 0, 2}, {"b", 3, 4}}, e}}, {});
  EXPECT_NEAR(partial.f1_vs_golden, 2.0 / 3.0, 1e-15);
  EXPECT_FALSE(partial.flagged);

  auto outlier = RaterCalibration("r4", {{e, e}}, {{{}, e}, {e, e}, {{}, e}});
  EXPECT_NEAR(*outlier.f1_vs_consensus, 1.0 / 3.0, 1e-15);
  EXPECT_TRUE(outlier.flagged);
  EXPECT_FALSE(RaterCalibration("r4", {{e, e}}, {{{}, e}, {e, e}, {{}, e}},
                                {0.6, 0.3})
                   .flagged);

  EXPECT_THROW(RaterCalibration("r5", {}, {{e, e}}), Error);
}

TEST(GoldLabel, JsonRoundTrip) {
  Document doc = Doc("a b c d e");
  GoldLabel g = AggregateSpans(Raters(doc, {{1, 2}, {2, 3}, {2}}),
                               Cfg(ConsensusMethod::kOr), doc);
  GoldLabel back = GoldLabelFromJson(GoldLabelToJson(g));
  EXPECT_EQ(back.spans, g.spans);
  EXPECT_EQ(back.config.method, ConsensusMethod::kOr);
  RaterChoiceLabel c{"t", "r", {{"m1", std::nullopt}, {"m2", "e1"}}};
  EXPECT_EQ(RaterChoiceLabelFromJson(RaterChoiceLabelToJson(c)).selections,
            c.selections);
}

}  // namespace
}  // namespace entex
