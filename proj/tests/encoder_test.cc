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

#include "entex/encoder.h"

#include <gtest/gtest.h>

#include <cmath>
#include <thread>

#include "entex/error.h"
#include "oracles.h"

namespace entex {
namespace {

double Norm(const Vector &v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

TEST(Tokenize, Examples) {
  auto t = Tokenize("Red shoes!");
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t[0].text, "Red");
  EXPECT_EQ(t[1].start, 4);
  EXPECT_EQ(t[1].end, 9);
  EXPECT_EQ(t[2].text, "!");
  EXPECT_EQ(t[2].start, 9);
  EXPECT_EQ(t[2].end, 10);
  EXPECT_TRUE(Tokenize("").empty());
  auto jb = Tokenize("Joe Biden");
  ASSERT_EQ(jb.size(), 2u);
  EXPECT_EQ(jb[1].start, 4);
  EXPECT_EQ(jb[1].end, 9);
}

TEST(Tokenize, EdgePunctuationOnly) {
  auto t = Tokenize("(don't)");
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t[0].text, "(");
  EXPECT_EQ(t[1].text, "don't");
  EXPECT_EQ(t[2].text, ")");
}

TEST(Tokenize, OffsetsReconstructText) {
  std::string text = "  Caf\xC3\xA9, na\xC3\xAFve\xE3\x80\x80test!! ok ";
  auto tokens = Tokenize(text);
  std::u32string src = DecodeUtf8(text);
  int prev = 0;
  for (const Token &t : tokens) {
    EXPECT_LE(prev, t.start);
    for (int i = prev; i < t.start; ++i) EXPECT_TRUE(IsWhitespace(src[i]));
    EXPECT_EQ(SubstrCodepoints(text, t.start, t.end), t.text);
    prev = t.end;
  }
}

TEST(ReferenceVector, TwoCharTokenMatchesFnvOracle) {
  Vector v = ReferenceTokenVector("ab", 64, 3);
  std::vector<double> expect(64, 0.0);
  for (const char *g : {"#ab", "ab#"}) {
    uint64_t h = oracle::Fnv(g);
    expect[h % 64] += (h >> 63) ? -1.0 : 1.0;
  }
  double n = 0;
  for (double x : expect) n += x * x;
  n = std::sqrt(n);
  int nonzero = 0;
  for (int i = 0; i < 64; ++i) {
    EXPECT_NEAR(v[i], expect[i] / n, 1e-15);
    nonzero += v[i] != 0.0;
  }
  EXPECT_LE(nonzero, 2);
  EXPECT_NEAR(Norm(v), 1.0, 1e-12);
}

TEST(ReferenceVector, NgramsOverScalars) {
  // "é" is one scalar: "#é#" is a single trigram.
  Vector v = ReferenceTokenVector("\xC3\xA9", 64, 3);
  uint64_t h = oracle::Fnv("#\xC3\xA9#");
  EXPECT_NEAR(std::fabs(v[h % 64]), 1.0, 1e-15);
}

TEST(Encoder, DeterministicAndNormalized) {
  Document d{"d1", DocType::kAd, "en",
             {{"title", "Red shoes Red"}, {"body", "shoes!"}}};
  Encoder enc;
  DocumentEncoding a = enc.Encode(d), b = enc.Encode(d);
  ASSERT_EQ(a.size(), 2u);
  EXPECT_EQ(enc.invocations(), 2u);
  for (size_t f = 0; f < a.size(); ++f) {
    EXPECT_EQ(a[f].vectors, b[f].vectors);
    EXPECT_EQ(a[f].vectors.rows(), static_cast<int>(a[f].tokens.size()));
    for (int r = 0; r < a[f].vectors.rows(); ++r) {
      EXPECT_NEAR(a[f].vectors.row(r).norm(), 1.0, 1e-6);
    }
  }
  EXPECT_EQ(a[0].vectors.row(0), a[0].vectors.row(2));
  EXPECT_EQ(a[0].vectors.row(1), a[1].vectors.row(0));
}

TEST(Encoder, CounterIsThreadSafe) {
  Document d{"d1", DocType::kAd, "en", {{"t", "x y"}}};
  Encoder enc;
  std::vector<std::thread> threads;
  for (int i = 0; i < 4; ++i) {
    threads.emplace_back([&] {
      for (int j = 0; j < 250; ++j) enc.Encode(d);
    });
  }
  for (auto &t : threads) t.join();
  EXPECT_EQ(enc.invocations(), 1000u);
}

TEST(EncoderSpec, Validation) {
  EncoderSpec s;
  s.dim = 4;
  EXPECT_THROW(s.Validate(), Error);
  s = {};
  s.kind = EncoderKind::kExternal;
  s.vectors_path = "/nonexistent/vectors.jsonl";
  EXPECT_THROW(Encoder{s}, Error);
}

TEST(Pool, Examples) {
  Encoder enc;
  TokenEncoding e = enc.EncodeText("Joe Biden Joe", "t");
  Vector one = Pool(e, {"t", 0, 3});
  for (int i = 0; i < 64; ++i) EXPECT_EQ(one[i], e.vectors(0, i));
  // Two identical tokens pool to the same vector.
  Vector same = Pool(e, {"t", 0, 13});
  Vector jb = Pool(e, {"t", 0, 9});
  Vector vj = ReferenceTokenVector("Joe", 64, 3);
  Vector vb = ReferenceTokenVector("Biden", 64, 3);
  std::vector<double> mean(64);
  double n = 0;
  for (int i = 0; i < 64; ++i) {
    mean[i] = (vj[i] + vb[i]) / 2.0;
    n += mean[i] * mean[i];
  }
  n = std::sqrt(n);
  for (int i = 0; i < 64; ++i) EXPECT_NEAR(jb[i], mean[i] / n, 1e-12);
  EXPECT_NEAR(Norm(same), 1.0, 1e-6);
  EXPECT_THROW(Pool(e, {"t", 3, 4}), Error);  // only whitespace
}

TEST(Pool, PartialOverlapCountsToken) {
  Encoder enc;
  TokenEncoding e = enc.EncodeText("Joe Biden", "t");
  Vector v = Pool(e, {"t", 5, 6});
  for (int i = 0; i < 64; ++i) EXPECT_NEAR(v[i], e.vectors(1, i), 1e-15);
}

}  // namespace
}  // namespace entex
