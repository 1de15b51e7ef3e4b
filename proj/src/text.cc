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

#include "entex/text.h"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <array>
#include <cstdio>
#include <unordered_map>

#include "entex/error.h"

namespace entex {

const char *ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kConflict: return "conflict";
    case ErrorCode::kCorrupt: return "corrupt";
    case ErrorCode::kIo: return "io_error";
    case ErrorCode::kFailedPrecondition: return "failed_precondition";
  }
  return "unknown";
}

std::string Hex64(uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(value));
  return buf;
}

namespace {

// Decodes one scalar starting at s[i]. Returns false on malformed input.
bool DecodeOne(std::string_view s, size_t *i, char32_t *out) {
  auto c = static_cast<unsigned char>(s[*i]);
  int len;
  char32_t cp;
  if (c < 0x80) {
    *out = c;
    *i += 1;
    return true;
  } else if ((c & 0xE0) == 0xC0) {
    len = 2;
    cp = c & 0x1F;
  } else if ((c & 0xF0) == 0xE0) {
    len = 3;
    cp = c & 0x0F;
  } else if ((c & 0xF8) == 0xF0) {
    len = 4;
    cp = c & 0x07;
  } else {
    return false;
  }
  if (*i + len > s.size()) return false;
  for (int k = 1; k < len; ++k) {
    auto cc = static_cast<unsigned char>(s[*i + k]);
    if ((cc & 0xC0) != 0x80) return false;
    cp = (cp << 6) | (cc & 0x3F);
  }
  // Reject overlong forms, surrogates and out-of-range values.
  static constexpr char32_t kMin[5] = {0, 0, 0x80, 0x800, 0x10000};
  if (cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    return false;
  }
  *out = cp;
  *i += len;
  return true;
}

}  // namespace

bool IsValidUtf8(std::string_view s) {
  size_t i = 0;
  char32_t cp;
  while (i < s.size()) {
    if (!DecodeOne(s, &i, &cp)) return false;
  }
  return true;
}

std::u32string DecodeUtf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  size_t i = 0;
  char32_t cp;
  while (i < s.size()) {
    if (!DecodeOne(s, &i, &cp)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "invalid UTF-8 at byte " + std::to_string(i));
    }
    out.push_back(cp);
  }
  return out;
}

void AppendUtf8(char32_t c, std::string *out) {
  if (c < 0x80) {
    out->push_back(static_cast<char>(c));
  } else if (c < 0x800) {
    out->push_back(static_cast<char>(0xC0 | (c >> 6)));
    out->push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else if (c < 0x10000) {
    out->push_back(static_cast<char>(0xE0 | (c >> 12)));
    out->push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out->push_back(static_cast<char>(0x80 | (c & 0x3F)));
  } else {
    out->push_back(static_cast<char>(0xF0 | (c >> 18)));
    out->push_back(static_cast<char>(0x80 | ((c >> 12) & 0x3F)));
    out->push_back(static_cast<char>(0x80 | ((c >> 6) & 0x3F)));
    out->push_back(static_cast<char>(0x80 | (c & 0x3F)));
  }
}

std::string EncodeUtf8(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t c : s) AppendUtf8(c, &out);
  return out;
}

int CodepointLength(std::string_view s) {
  int n = 0;
  for (unsigned char c : s) {
    if ((c & 0xC0) != 0x80) ++n;
  }
  return n;
}

std::string SubstrCodepoints(std::string_view s, int start, int end) {
  size_t begin_byte = s.size(), end_byte = s.size();
  int cp = 0;
  for (size_t i = 0; i <= s.size(); ++i) {
    bool boundary =
        i == s.size() || (static_cast<unsigned char>(s[i]) & 0xC0) != 0x80;
    if (!boundary) continue;
    if (cp == start) begin_byte = i;
    if (cp == end) {
      end_byte = i;
      break;
    }
    ++cp;
  }
  if (begin_byte > end_byte) return "";
  return std::string(s.substr(begin_byte, end_byte - begin_byte));
}

bool IsWhitespace(char32_t c) {
  if (c < 0x80) return c == ' ' || (c >= '\t' && c <= '\r');
  return u_isUWhiteSpace(static_cast<UChar32>(c));
}

bool IsPunctuation(char32_t c) {
  static const std::array<bool, 128> kAscii = [] {
    std::array<bool, 128> t{};
    for (int i = 0; i < 128; ++i) t[i] = u_ispunct(i);
    return t;
  }();
  if (c < 0x80) return kAscii[c];
  return u_ispunct(static_cast<UChar32>(c));
}

bool IsDigit(char32_t c) {
  return u_isdigit(static_cast<UChar32>(c));
}

namespace {

struct Normalizers {
  const icu::Normalizer2 *nfkc_cf;
  const icu::Normalizer2 *nfd;

  Normalizers() {
    UErrorCode status = U_ZERO_ERROR;
    nfkc_cf = icu::Normalizer2::getNFKCCasefoldInstance(status);
    nfd = icu::Normalizer2::getNFDInstance(status);
    if (U_FAILURE(status)) {
      throw Error(ErrorCode::kFailedPrecondition,
                  std::string("ICU normalizer unavailable: ") +
                      u_errorName(status));
    }
  }
};

const Normalizers &GetNormalizers() {
  static const Normalizers normalizers;
  return normalizers;
}

icu::UnicodeString StripMarks(const icu::UnicodeString &s) {
  icu::UnicodeString out;
  for (int32_t i = 0; i < s.length();) {
    UChar32 c = s.char32At(i);
    int8_t type = u_charType(c);
    if (type != U_NON_SPACING_MARK && type != U_ENCLOSING_MARK) out.append(c);
    i += U16_LENGTH(c);
  }
  return out;
}

// Mapping of a single non-whitespace source character. Internal whitespace
// becomes a single ' ', leading and trailing whitespace is trimmed.
std::u32string MapCharacterUncached(char32_t c) {
  const Normalizers &n = GetNormalizers();
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString s(static_cast<UChar32>(c));
  // Folding and mark removal interact (e.g. a folded form may decompose to
  // a base plus marks); iterate to a fixed point.
  for (int iter = 0; iter < 4; ++iter) {
    icu::UnicodeString folded = n.nfkc_cf->normalize(s, status);
    icu::UnicodeString stripped =
        StripMarks(n.nfd->normalize(folded, status));
    icu::UnicodeString next = n.nfkc_cf->normalize(stripped, status);
    if (U_FAILURE(status)) return std::u32string(1, c);
    if (next == s) break;
    s = next;
  }
  std::u32string out;
  bool pending_space = false;
  for (int32_t i = 0; i < s.length();) {
    UChar32 cp = s.char32At(i);
    i += U16_LENGTH(cp);
    if (IsWhitespace(static_cast<char32_t>(cp))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(static_cast<char32_t>(cp));
  }
  return out;
}

const std::u32string &MapCharacter(char32_t c) {
  thread_local std::unordered_map<char32_t, std::u32string> cache;
  auto it = cache.find(c);
  if (it != cache.end()) return it->second;
  return cache.emplace(c, MapCharacterUncached(c)).first->second;
}

}  // namespace

bool NormalizedText::AlignedRange(int byte_begin, int byte_end) const {
  if (byte_begin < 0 || byte_end > static_cast<int>(text.size()) ||
      byte_begin >= byte_end) {
    return false;
  }
  return units[byte_unit[byte_begin]].byte_begin == byte_begin &&
         units[byte_unit[byte_end - 1]].byte_end == byte_end;
}

NormalizedText NormalizeWithOffsets(std::u32string_view source) {
  NormalizedText out;
  out.text.reserve(source.size());
  out.units.reserve(source.size());
  out.byte_unit.reserve(source.size());

  // Source position where absorbed characters begin when no unit precedes
  // them directly.
  int pending_begin = -1;
  bool last_is_text_unit = false;
  int ws_begin = -1, ws_end = -1;

  auto emit_unit = [&](int orig_begin, int orig_end, bool whitespace,
                       auto &&write) {
    NormalizedText::Unit unit;
    unit.orig_begin = orig_begin;
    unit.orig_end = orig_end;
    unit.whitespace = whitespace;
    unit.byte_begin = static_cast<int>(out.text.size());
    write();
    unit.byte_end = static_cast<int>(out.text.size());
    int index = static_cast<int>(out.units.size());
    out.units.push_back(unit);
    for (int b = unit.byte_begin; b < unit.byte_end; ++b) {
      out.byte_unit.push_back(index);
    }
  };

  const int n = static_cast<int>(source.size());
  for (int i = 0; i < n; ++i) {
    char32_t c = source[i];
    if (c > ' ' && c < 0x7F && ws_begin < 0 && pending_begin < 0) {
      NormalizedText::Unit unit;
      unit.orig_begin = i;
      unit.orig_end = i + 1;
      unit.byte_begin = static_cast<int>(out.text.size());
      unit.byte_end = unit.byte_begin + 1;
      out.byte_unit.push_back(static_cast<int>(out.units.size()));
      out.units.push_back(unit);
      out.text.push_back(
          static_cast<char>((c >= 'A' && c <= 'Z') ? c + 32 : c));
      last_is_text_unit = true;
      continue;
    }
    if (IsWhitespace(c)) {
      if (ws_begin < 0) ws_begin = i;
      ws_end = i + 1;
      last_is_text_unit = false;
      pending_begin = -1;
      continue;
    }
    char32_t ascii_mapped = 0;
    const std::u32string *mapped = nullptr;
    if (c < 0x80) {
      ascii_mapped = (c >= 'A' && c <= 'Z') ? c + 32 : c;
    } else {
      mapped = &MapCharacter(c);
      if (mapped->empty()) {
        if (last_is_text_unit) {
          out.units.back().orig_end = i + 1;
        } else if (pending_begin < 0) {
          pending_begin = i;
        }
        continue;
      }
    }
    if (ws_begin >= 0) {
      // Leading whitespace is trimmed; internal runs collapse to one space.
      if (!out.units.empty()) {
        emit_unit(ws_begin, ws_end, true, [&] { out.text.push_back(' '); });
      }
      ws_begin = ws_end = -1;
    }
    int begin = pending_begin >= 0 ? pending_begin : i;
    pending_begin = -1;
    emit_unit(begin, i + 1, false, [&] {
      if (mapped == nullptr) {
        out.text.push_back(static_cast<char>(ascii_mapped));
      } else {
        for (char32_t m : *mapped) AppendUtf8(m, &out.text);
      }
    });
    last_is_text_unit = true;
  }
  return out;
}

std::string NormalizeAlias(std::string_view text) {
  return NormalizeWithOffsets(DecodeUtf8(text)).text;
}

}  // namespace entex
