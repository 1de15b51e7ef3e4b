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

// UTF-8 helpers, character classes and alias normalization. All character
// offsets in this project count Unicode scalar values.

#ifndef ENTEX_TEXT_H_
#define ENTEX_TEXT_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace entex {

// FNV-1a, 64-bit. Offset basis 0xcbf29ce484222325, prime 0x100000001b3.
constexpr uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ULL;
constexpr uint64_t kFnvPrime = 0x100000001b3ULL;

inline uint64_t Fnv1a64(std::string_view bytes,
                        uint64_t hash = kFnvOffsetBasis) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= kFnvPrime;
  }
  return hash;
}

// Lowercase, zero-padded 16 digit hex rendering.
std::string Hex64(uint64_t value);

bool IsValidUtf8(std::string_view s);

// Throws Error(kInvalidArgument) on malformed input.
std::u32string DecodeUtf8(std::string_view s);
std::string EncodeUtf8(std::u32string_view s);
void AppendUtf8(char32_t c, std::string *out);

// Number of scalar values in a valid UTF-8 string.
int CodepointLength(std::string_view s);

// Substring by scalar offsets [start, end). Caller checks bounds.
std::string SubstrCodepoints(std::string_view s, int start, int end);

bool IsWhitespace(char32_t c);
bool IsPunctuation(char32_t c);
bool IsDigit(char32_t c);

// Normalized text with a map back to the source. The source is split into
// units; a unit is either one source character with a non-empty mapping or a
// collapsed run of whitespace. Source characters whose mapping is empty
// (combining marks, default ignorables) are absorbed into the neighbouring
// unit so that source ranges stay contiguous.
struct NormalizedText {
  struct Unit {
    int orig_begin = 0;  // scalar offsets into the source
    int orig_end = 0;
    int byte_begin = 0;  // byte offsets into `text`
    int byte_end = 0;
    bool whitespace = false;
  };

  std::string text;
  std::vector<Unit> units;
  std::vector<int> byte_unit;  // byte index -> unit index

  // True when [byte_begin, byte_end) starts and ends on unit edges.
  bool AlignedRange(int byte_begin, int byte_end) const;
};

// Unicode NFKC with case folding, combining marks removed, whitespace runs
// collapsed to one space and trimmed. Applied one source character at a
// time so every normalized byte maps back to the source.
NormalizedText NormalizeWithOffsets(std::u32string_view source);

// Text-only form of NormalizeWithOffsets. Idempotent.
std::string NormalizeAlias(std::string_view text);

}  // namespace entex

#endif  // ENTEX_TEXT_H_
