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

#include <cmath>
#include <filesystem>

#include "entex/error.h"
#include "entex/text.h"

namespace entex {

void EncoderSpec::Validate() const {
  if (dim < 8) {
    throw Error(ErrorCode::kInvalidArgument,
                "encoder dim must be >= 8, got " + std::to_string(dim));
  }
  if (ngram_n < 1) {
    throw Error(ErrorCode::kInvalidArgument, "ngram_n must be positive");
  }
}

Json EncoderSpec::ToJson() const {
  Json j = {{"kind", kind == EncoderKind::kReferenceNgram ? "reference_ngram"
                                                          : "external"},
            {"dim", dim},
            {"ngram_n", ngram_n}};
  if (kind == EncoderKind::kExternal) j["vectors_path"] = vectors_path;
  return j;
}

EncoderSpec EncoderSpec::FromJson(const Json &j) {
  EncoderSpec spec;
  std::string kind = j.value("kind", "reference_ngram");
  if (kind == "reference_ngram") {
    spec.kind = EncoderKind::kReferenceNgram;
  } else if (kind == "external") {
    spec.kind = EncoderKind::kExternal;
  } else {
    throw Error(ErrorCode::kInvalidArgument, "unknown encoder kind " + kind);
  }
  spec.dim = j.value("dim", 64);
  spec.ngram_n = j.value("ngram_n", 3);
  spec.vectors_path = j.value("vectors_path", "");
  spec.Validate();
  return spec;
}

std::vector<std::pair<int, int>> TokenBounds(std::u32string_view cps) {
  std::vector<std::pair<int, int>> tokens;
  const int n = static_cast<int>(cps.size());
  int i = 0;
  while (i < n) {
    if (IsWhitespace(cps[i])) {
      ++i;
      continue;
    }
    int chunk_end = i;
    while (chunk_end < n && !IsWhitespace(cps[chunk_end])) ++chunk_end;
    int core_begin = i;
    while (core_begin < chunk_end && IsPunctuation(cps[core_begin])) {
      tokens.push_back({core_begin, core_begin + 1});
      ++core_begin;
    }
    int core_end = chunk_end;
    while (core_end > core_begin && IsPunctuation(cps[core_end - 1])) {
      --core_end;
    }
    if (core_begin < core_end) tokens.push_back({core_begin, core_end});
    for (int k = core_end; k < chunk_end && k >= core_begin; ++k) {
      tokens.push_back({k, k + 1});
    }
    i = chunk_end;
  }
  return tokens;
}

std::vector<Token> Tokenize(std::string_view text, std::string_view field) {
  std::vector<Token> tokens;
  if (text.empty()) return tokens;
  std::u32string cps = DecodeUtf8(text);
  for (const auto &[start, end] : TokenBounds(cps)) {
    tokens.push_back({std::string(field), start, end,
                      EncodeUtf8(std::u32string_view(cps).substr(
                          start, end - start))});
  }
  return tokens;
}

double NormalizeInPlace(Vector *v) {
  double sq = 0.0;
  for (double x : *v) sq += x * x;
  double norm = std::sqrt(sq);
  if (norm > 0.0) {
    for (double &x : *v) x /= norm;
  }
  return norm;
}

Vector ReferenceTokenVector(std::string_view token, int dim, int ngram_n) {
  Vector v(dim, 0.0);
  std::u32string padded = U"#" + DecodeUtf8(token) + U"#";
  const int len = static_cast<int>(padded.size());
  const int n = std::min(ngram_n, len);
  std::string gram;
  for (int i = 0; i + n <= len; ++i) {
    gram.clear();
    for (int k = 0; k < n; ++k) AppendUtf8(padded[i + k], &gram);
    uint64_t h = Fnv1a64(gram);
    auto index = static_cast<size_t>(h % static_cast<uint64_t>(dim));
    v[index] += (h >> 63) == 0 ? 1.0 : -1.0;
  }
  NormalizeInPlace(&v);
  return v;
}

Encoder::Encoder(EncoderSpec spec) : spec_(std::move(spec)) {
  spec_.Validate();
  if (spec_.kind != EncoderKind::kExternal) return;
  if (spec_.vectors_path.empty() ||
      !std::filesystem::exists(spec_.vectors_path)) {
    throw Error(ErrorCode::kIo,
                "external vectors file missing: '" + spec_.vectors_path + "'");
  }
  for (const Json &row : ReadJsonLines(spec_.vectors_path)) {
    auto key = std::make_pair(row.at("doc_id").get<std::string>(),
                              row.at("field").get<std::string>());
    auto index = row.at("token_index").get<size_t>();
    Vector v = row.at("vector").get<Vector>();
    if (static_cast<int>(v.size()) != spec_.dim) {
      throw Error(ErrorCode::kInvalidArgument,
                  "external vector has dim " + std::to_string(v.size()) +
                      ", expected " + std::to_string(spec_.dim));
    }
    NormalizeInPlace(&v);
    auto &rows = external_[key];
    if (rows.size() <= index) rows.resize(index + 1);
    rows[index] = std::move(v);
  }
}

void Encoder::EmbedTokens(TokenEncoding *encoding) const {
  const int rows = static_cast<int>(encoding->tokens.size());
  encoding->vectors.setZero(rows, spec_.dim);
  for (int r = 0; r < rows; ++r) {
    Vector v = ReferenceTokenVector(encoding->tokens[r].text, spec_.dim,
                                    spec_.ngram_n);
    encoding->vectors.row(r) = Eigen::Map<const Eigen::RowVectorXd>(
        v.data(), static_cast<Eigen::Index>(v.size()));
  }
}

DocumentEncoding Encoder::Encode(const Document &doc) const {
  invocations_.fetch_add(1, std::memory_order_relaxed);
  DocumentEncoding out;
  out.reserve(doc.fields.size());
  for (const Field &field : doc.fields) {
    TokenEncoding enc;
    enc.field = field.name;
    enc.tokens = Tokenize(field.text, field.name);
    if (spec_.kind == EncoderKind::kReferenceNgram) {
      EmbedTokens(&enc);
    } else {
      auto it = external_.find({doc.id, field.name});
      if (!enc.tokens.empty() &&
          (it == external_.end() || it->second.size() != enc.tokens.size())) {
        throw Error(ErrorCode::kNotFound,
                    "no external vectors for " + doc.id + "/" + field.name);
      }
      enc.vectors.setZero(static_cast<Eigen::Index>(enc.tokens.size()),
                          spec_.dim);
      for (size_t r = 0; r < enc.tokens.size(); ++r) {
        const Vector &v = it->second[r];
        if (v.empty()) {
          throw Error(ErrorCode::kNotFound,
                      "missing external vector for token " +
                          std::to_string(r) + " of " + doc.id + "/" +
                          field.name);
        }
        enc.vectors.row(static_cast<Eigen::Index>(r)) =
            Eigen::Map<const Eigen::RowVectorXd>(v.data(), spec_.dim);
      }
    }
    out.push_back(std::move(enc));
  }
  return out;
}

TokenEncoding Encoder::EncodeText(std::string_view text,
                                  std::string_view field) const {
  if (spec_.kind != EncoderKind::kReferenceNgram) {
    throw Error(ErrorCode::kFailedPrecondition,
                "free text encoding requires the reference encoder");
  }
  TokenEncoding enc;
  enc.field = std::string(field);
  enc.tokens = Tokenize(text, field);
  EmbedTokens(&enc);
  return enc;
}

namespace {

Vector NormalizedMean(const RowMatrix &rows, const std::vector<int> &which) {
  Vector mean(static_cast<size_t>(rows.cols()), 0.0);
  if (which.empty()) return mean;
  for (int r : which) {
    for (Eigen::Index c = 0; c < rows.cols(); ++c) mean[c] += rows(r, c);
  }
  for (double &x : mean) x /= static_cast<double>(which.size());
  NormalizeInPlace(&mean);
  return mean;
}

}  // namespace

Vector Pool(const TokenEncoding &encoding, const Span &span) {
  if (span.field != encoding.field) {
    throw Error(ErrorCode::kInvalidArgument,
                "span field '" + span.field + "' does not match encoding '" +
                    encoding.field + "'");
  }
  std::vector<int> overlapping;
  for (size_t i = 0; i < encoding.tokens.size(); ++i) {
    const Token &t = encoding.tokens[i];
    if (t.start < span.end && span.start < t.end) {
      overlapping.push_back(static_cast<int>(i));
    }
  }
  if (overlapping.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "span [" + std::to_string(span.start) + "," +
                    std::to_string(span.end) + ") overlaps no token");
  }
  return NormalizedMean(encoding.vectors, overlapping);
}

Vector PoolAll(const TokenEncoding &encoding) {
  std::vector<int> all(encoding.tokens.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  if (all.empty()) return Vector(static_cast<size_t>(encoding.vectors.cols()));
  return NormalizedMean(encoding.vectors, all);
}

}  // namespace entex
