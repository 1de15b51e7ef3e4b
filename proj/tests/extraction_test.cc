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

#include "entex/extraction.h"

#include <gtest/gtest.h>

#include <cmath>

#include "entex/error.h"
#include "oracles.h"

namespace entex {
namespace {

TEST(ScoreTokens, ZeroHeadGivesHalf) {
  Encoder enc;
  TokenEncoding e = enc.EncodeText("a b c");
  HeadParams h = HeadParams::Zero("product", 64);
  for (double p : ScoreTokens(e, h)) EXPECT_EQ(p, 0.5);
}

TEST(ScoreTokens, HandSetOneByOne) {
  HeadParams h = HeadParams::Zero("x", 1, 1);
  h.w1(0, 0) = 1.0;
  h.w2(0) = 1.0;
  TokenEncoding e;
  e.tokens = {{"t", 0, 1, "a"}};
  e.vectors = RowMatrix::Ones(1, 1);
  EXPECT_NEAR(ScoreTokens(e, h)[0], 0.7310586, 1e-7);
}

TEST(ScoreTokens, DimMismatchThrows) {
  Encoder enc;
  TokenEncoding e = enc.EncodeText("a");
  EXPECT_THROW(ScoreTokens(e, HeadParams::Zero("x", 32)), Error);
}

TEST(DecodeRuns, Examples) {
  DecodeConfig cfg;
  std::vector<double> p = {0.9, 0.8, 0.2, 0.7};
  auto runs = DecodeRuns(p, cfg);
  ASSERT_EQ(runs.size(), 2u);
  EXPECT_EQ(runs[0], (TokenRun{0, 1}));
  EXPECT_EQ(runs[1], (TokenRun{3, 3}));
  std::vector<double> low = {0.5, 0.1, 0.3};
  EXPECT_TRUE(DecodeRuns(low, cfg).empty());
  std::vector<double> long_run(20, 0.6);
  EXPECT_TRUE(DecodeRuns(long_run, cfg).empty());
}

TEST(DecodeRuns, MatchesBruteForce) {
  Rng rng(41);
  for (int c = 0; c < 2000; ++c) {
    int n = static_cast<int>(rng.Below(40));
    std::vector<double> p(n);
    for (double &x : p) x = rng.Uniform();
    DecodeConfig cfg{0.1 + 0.8 * rng.Uniform(), 1 + (int)rng.Below(3),
                     3 + (int)rng.Below(10)};
    std::vector<std::pair<int, int>> got;
    for (const TokenRun &r : DecodeRuns(p, cfg)) got.push_back({r.first, r.last});
    EXPECT_EQ(got, oracle::DecodeRuns(p, cfg.threshold, cfg.min_tokens,
                                      cfg.max_tokens));
  }
}

TEST(DecodeSpans, MapsTokenRunsToCharacters) {
  auto tokens = Tokenize("Joe Biden spoke", "title");
  std::vector<double> p = {0.9, 0.9, 0.1};
  auto spans = DecodeSpans(p, tokens, {});
  ASSERT_EQ(spans.size(), 1u);
  EXPECT_EQ(spans[0], (Span{"title", 0, 9}));
  std::vector<double> bad = {0.9};
  EXPECT_THROW(DecodeSpans(bad, tokens, {}), Error);
}

TEST(DecodeConfig, Validation) {
  EXPECT_THROW((DecodeConfig{0.0, 1, 16}.Validate()), Error);
  EXPECT_THROW((DecodeConfig{0.5, 3, 2}.Validate()), Error);
  EXPECT_NO_THROW((DecodeConfig{0.5, 1, 1}.Validate()));
}

HeadParams RandomHead(const std::string &type, int dim, int hidden,
                      uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  HeadParams h = HeadParams::Zero(type, dim, hidden);
  for (int i = 0; i < h.w1.size(); ++i) h.w1.data()[i] = rng.Uniform(-scale, scale);
  for (int i = 0; i < hidden; ++i) {
    h.b1(i) = rng.Uniform(-scale, scale);
    h.w2(i) = rng.Uniform(-scale, scale);
  }
  h.b2 = rng.Uniform(-scale, scale);
  return h;
}

TEST(MultiTaskExtract, OneEncodePerDocumentAndHeadIndependence) {
  Document d{"d1", DocType::kAd, "en",
             {{"title", "Zebra Pro headphones"}, {"body", "Buy Zebra today"}}};
  std::vector<HeadParams> heads;
  for (int i = 0; i < 7; ++i) {
    heads.push_back(RandomHead("t" + std::to_string(i), 64, 8, 100 + i));
  }
  Encoder enc;
  DecodeConfig cfg;
  ExtractionResult all = MultiTaskExtract(d, heads, cfg, enc);
  EXPECT_EQ(enc.invocations(), 1u);
  for (const HeadParams &h : heads) {
    Encoder solo_enc;
    auto solo = MultiTaskExtract(d, std::span<const HeadParams>(&h, 1), cfg,
                                 solo_enc);
    const auto &a = all[h.entity_type];
    const auto &b = solo[h.entity_type];
    ASSERT_EQ(a.size(), b.size());
    for (size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i].mention.span, b[i].mention.span);
      EXPECT_EQ(a[i].score, b[i].score);
      EXPECT_EQ(a[i].mention.embedding, b[i].mention.embedding);
    }
    // Manual composition gives the same spans.
    DocumentEncoding e = solo_enc.Encode(d);
    std::vector<Span> manual;
    for (const TokenEncoding &te : e) {
      auto s = DecodeSpans(ScoreTokens(te, h), te.tokens, cfg);
      manual.insert(manual.end(), s.begin(), s.end());
    }
    ASSERT_EQ(manual.size(), a.size());
    for (size_t i = 0; i < a.size(); ++i) EXPECT_EQ(manual[i], a[i].mention.span);
  }
}

TEST(TokenLabels, OverlapMarksTokens) {
  Document d{"d1", DocType::kAd, "en", {{"title", "Joe Biden spoke"}}};
  auto labels = TokenLabelsFromSpans(d, {{"title", 0, 9}});
  EXPECT_EQ(labels["title"], (std::vector<int>{1, 1, 0}));
}

TEST(TrainHead, AllZeroLabelsGiveLowScores) {
  Document d{"d1", DocType::kAd, "en", {{"title", "red shoes on sale now"}}};
  std::vector<LabeledDocument> corpus = {{d, TokenLabelsFromSpans(d, {})}};
  Encoder enc;
  HeadHyper hyper;
  hyper.hidden = 8;
  hyper.epochs = 200;
  HeadTrainResult r = TrainHead("x", corpus, enc, hyper);
  EXPECT_LT(r.head.b2, 0.0);
  for (double p : ScoreTokens(enc.Encode(d)[0], r.head)) EXPECT_LT(p, 0.5);
}

TEST(TrainHead, OneStepMatchesScalarOracle) {
  TokenDataset data;
  data.x = RowMatrix(2, 3);
  data.x << 0.6, -0.8, 0.0, 0.0, 0.6, 0.8;
  data.y = Eigen::VectorXd(2);
  data.y << 1.0, 0.0;
  HeadHyper hyper;
  hyper.hidden = 4;
  hyper.epochs = 1;
  hyper.lr = 0.1;
  HeadParams h0 = InitHead("x", 3, hyper);
  HeadTrainResult r = TrainHeadOnDataset("x", data, {}, hyper);

  // Scalar forward/backward.
  const int H = 4, D = 3, N = 2;
  double w1[4][3], b1[4], w2[4], b2 = h0.b2;
  for (int j = 0; j < H; ++j) {
    for (int k = 0; k < D; ++k) w1[j][k] = h0.w1(j, k);
    b1[j] = h0.b1(j);
    w2[j] = h0.w2(j);
  }
  double gw1[4][3] = {}, gb1[4] = {}, gw2[4] = {}, gb2 = 0;
  for (int i = 0; i < N; ++i) {
    double pre[4], act[4], z = b2;
    for (int j = 0; j < H; ++j) {
      pre[j] = b1[j];
      for (int k = 0; k < D; ++k) pre[j] += w1[j][k] * data.x(i, k);
      act[j] = pre[j] > 0 ? pre[j] : 0;
      z += w2[j] * act[j];
    }
    double dz = (oracle::Sigmoid(z) - data.y(i)) / N;
    gb2 += dz;
    for (int j = 0; j < H; ++j) {
      gw2[j] += dz * act[j];
      double dp = pre[j] > 0 ? dz * w2[j] : 0;
      gb1[j] += dp;
      for (int k = 0; k < D; ++k) gw1[j][k] += dp * data.x(i, k);
    }
  }
  for (int j = 0; j < H; ++j) {
    for (int k = 0; k < D; ++k) w1[j][k] -= 0.1 * gw1[j][k];
    b1[j] -= 0.1 * gb1[j];
    w2[j] -= 0.1 * gw2[j];
  }
  b2 -= 0.1 * gb2;
  double loss = 0;
  for (int i = 0; i < N; ++i) {
    double z = b2;
    for (int j = 0; j < H; ++j) {
      double pre = b1[j];
      for (int k = 0; k < D; ++k) pre += w1[j][k] * data.x(i, k);
      z += w2[j] * (pre > 0 ? pre : 0);
    }
    double p = oracle::Sigmoid(z);
    loss += -(data.y(i) * std::log(p) + (1 - data.y(i)) * std::log(1 - p));
  }
  loss /= N;
  EXPECT_NEAR(r.final_loss, loss, 1e-12);
}

TEST(HeadLoss, GradientMatchesFiniteDifferences) {
  Rng rng(8);
  TokenDataset data;
  data.x = RowMatrix(6, 5);
  data.y = Eigen::VectorXd(6);
  for (int i = 0; i < 6; ++i) {
    for (int k = 0; k < 5; ++k) data.x(i, k) = rng.Uniform(-1, 1);
    data.y(i) = i % 2;
  }
  HeadParams h = RandomHead("x", 5, 7, 99);
  HeadGradient g;
  HeadLoss(h, data, &g);
  auto f = [&] { return HeadLoss(h, data, nullptr); };
  double worst = 0;
  for (int i = 0; i < h.w1.size(); ++i) {
    worst = std::max(worst, oracle::RelError(
        g.w1.data()[i], oracle::CentralDifference(f, h.w1.data() + i)));
  }
  for (int i = 0; i < h.hidden(); ++i) {
    worst = std::max(worst, oracle::RelError(
        g.b1(i), oracle::CentralDifference(f, h.b1.data() + i)));
    worst = std::max(worst, oracle::RelError(
        g.w2(i), oracle::CentralDifference(f, h.w2.data() + i)));
  }
  worst = std::max(worst,
                   oracle::RelError(g.b2, oracle::CentralDifference(f, &h.b2)));
  EXPECT_LT(worst, 1e-4);
}

TEST(TrainHead, LossNonIncreasingAtSmallLr) {
  Document d{"d1", DocType::kAd, "en",
             {{"title", "Zebra Pro headphones by Zebra"}}};
  std::vector<LabeledDocument> corpus = {
      {d, TokenLabelsFromSpans(d, {{"title", 0, 9}, {"title", 26, 31}})}};
  Encoder enc;
  HeadHyper hyper;
  hyper.lr = 1e-3;
  hyper.epochs = 50;
  hyper.hidden = 16;
  HeadTrainResult r = TrainHead("brand", corpus, enc, hyper);
  for (size_t i = 1; i < r.losses.size(); ++i) {
    EXPECT_LE(r.losses[i], r.losses[i - 1] + 1e-15);
  }
  EXPECT_LE(r.final_loss, r.losses.back());
}

TEST(TrainHead, DeterministicAndRejectsBadInput) {
  Document d{"d1", DocType::kAd, "en", {{"title", "a b c"}}};
  std::vector<LabeledDocument> corpus = {
      {d, TokenLabelsFromSpans(d, {{"title", 2, 3}})}};
  Encoder enc;
  HeadHyper hyper;
  hyper.hidden = 8;
  hyper.epochs = 5;
  auto a = TrainHead("x", corpus, enc, hyper);
  auto b = TrainHead("x", corpus, enc, hyper);
  EXPECT_EQ(a.head.w1, b.head.w1);
  EXPECT_EQ(a.final_loss, b.final_loss);
  EXPECT_THROW(TrainHead("x", {}, enc, hyper), Error);
  corpus[0].token_labels["title"] = {1, 0};
  EXPECT_THROW(TrainHead("x", corpus, enc, hyper), Error);
}

TEST(InitHead, UniformRange) {
  HeadHyper hyper;
  HeadParams h = InitHead("x", 64, hyper);
  EXPECT_EQ(h.hidden(), 128);
  EXPECT_LE(h.w1.cwiseAbs().maxCoeff(), 0.05);
  EXPECT_EQ(h.b1.cwiseAbs().maxCoeff(), 0.0);
}

TEST(HeadParams, JsonRoundTrip) {
  HeadParams h = RandomHead("brand", 8, 4, 5);
  h.threshold = 0.7;
  HeadParams back = HeadParams::FromJson(h.ToJson());
  EXPECT_EQ(back.w1, h.w1);
  EXPECT_EQ(back.b2, h.b2);
  EXPECT_EQ(back.threshold, h.threshold);
  EXPECT_EQ(back.entity_type, "brand");
  Json bad = h.ToJson();
  bad["b1"] = Json::array({1.0});
  EXPECT_THROW(HeadParams::FromJson(bad), Error);
}

TEST(ExtractedMention, JsonRoundTrip) {
  ExtractedMention m{"brand", {"d1", {"title", 0, 5}, "Zebra", {0.6, 0.8}}, 0.9};
  Json j = ExtractedMentionToJson(m, true);
  EXPECT_EQ(j["mention_id"], "d1:title:0-5");
  ExtractedMention back = ExtractedMentionFromJson(j);
  EXPECT_EQ(back.mention.embedding, m.mention.embedding);
  EXPECT_FALSE(ExtractedMentionToJson(m).contains("embedding"));
}

}  // namespace
}  // namespace entex
