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

// Tokenization and the per-token embedding function that every head
// consumes.
//
// The reference encoder maps a token to the L2-normalized signed-hash bag of
// character n-grams of "#" + token + "#". For each n-gram g (taken over
// scalar values, hashed over its UTF-8 bytes), h = FNV-1a-64(g),
// index = h mod dim, sign = +1 if bit 63 of h is clear, -1 otherwise. The
// result is bit-exact across platforms.
//
// External vectors file (JSONL):
//   {"doc_id": "...", "field": "...", "token_index": 0, "vector": [d floats]}

#ifndef ENTEX_ENCODER_H_
#define ENTEX_ENCODER_H_

#include <Eigen/Dense>

#include <atomic>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "entex/document.h"

namespace entex {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Token {
  std::string field;
  int start = 0;  // scalar offsets
  int end = 0;
  std::string text;

  bool operator==(const Token &) const = default;
};

// Per-field encoding; one row of `vectors` per token.
struct TokenEncoding {
  std::string field;
  std::vector<Token> tokens;
  RowMatrix vectors;
};

// One TokenEncoding per document field, in field order.
using DocumentEncoding = std::vector<TokenEncoding>;

enum class EncoderKind { kReferenceNgram, kExternal };

struct EncoderSpec {
  EncoderKind kind = EncoderKind::kReferenceNgram;
  int dim = 64;
  int ngram_n = 3;
  std::string vectors_path;  // external kind only

  void Validate() const;
  Json ToJson() const;
  static EncoderSpec FromJson(const Json &j);

  bool operator==(const EncoderSpec &) const = default;
};

// Splits on Unicode whitespace. Punctuation at either edge of a
// whitespace-delimited chunk becomes a separate one-character token.
std::vector<Token> Tokenize(std::string_view text, std::string_view field = "");

// Token [start, end) scalar offsets of Tokenize over decoded text.
std::vector<std::pair<int, int>> TokenBounds(std::u32string_view cps);

// Reference embedding of a single token.
Vector ReferenceTokenVector(std::string_view token, int dim, int ngram_n);

class Encoder {
 public:
  // Loads the vectors file for the external kind. Throws Error(kIo) when it
  // is missing.
  explicit Encoder(EncoderSpec spec = {});

  Encoder(const Encoder &) = delete;
  Encoder &operator=(const Encoder &) = delete;

  // Thread-safe. Increments the invocation counter by exactly one.
  DocumentEncoding Encode(const Document &doc) const;

  // Encodes free text as a single field without touching the counter.
  TokenEncoding EncodeText(std::string_view text,
                           std::string_view field = "text") const;

  uint64_t invocations() const {
    return invocations_.load(std::memory_order_relaxed);
  }
  void ResetInvocations() { invocations_.store(0); }

  const EncoderSpec &spec() const { return spec_; }
  int dim() const { return spec_.dim; }

 private:
  void EmbedTokens(TokenEncoding *encoding) const;

  EncoderSpec spec_;
  mutable std::atomic<uint64_t> invocations_{0};
  // (doc_id, field) -> rows indexed by token position.
  std::map<std::pair<std::string, std::string>, std::vector<Vector>> external_;
};

// Mean of the vectors of every token overlapping `span`, L2-normalized (zero
// stays zero). Throws Error(kInvalidArgument) when no token overlaps.
Vector Pool(const TokenEncoding &encoding, const Span &span);

// Mean of all rows, normalized. Zero vector for an empty encoding.
Vector PoolAll(const TokenEncoding &encoding);

// Normalizes in place; returns the original norm.
double NormalizeInPlace(Vector *v);

}  // namespace entex

#endif  // ENTEX_ENCODER_H_
