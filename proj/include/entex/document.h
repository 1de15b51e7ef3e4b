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

// Documents, spans and mentions shared by every stage, plus JSONL I/O.
//
// Document wire format (one object per line):
//   {"id": "d1", "doc_type": "ad" | "web_page" | "ugc", "language": "en",
//    "fields": [{"name": "title", "text": "..."}, ...]}
// Span offsets count Unicode scalar values, never bytes or UTF-16 units.
// Categorical metadata travels as extra fields whose text is the value.

#ifndef ENTEX_DOCUMENT_H_
#define ENTEX_DOCUMENT_H_

#include <compare>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace entex {

using Json = nlohmann::json;
using Vector = std::vector<double>;

enum class DocType { kAd, kWebPage, kUgc };

const char *DocTypeName(DocType type);
DocType ParseDocType(std::string_view name);  // throws on unknown values

struct Field {
  std::string name;
  std::string text;

  bool operator==(const Field &) const = default;
};

struct Document {
  std::string id;
  DocType doc_type = DocType::kAd;
  std::string language;
  std::vector<Field> fields;

  // Returns nullptr when no field has this name.
  const Field *FindField(std::string_view name) const;

  bool operator==(const Document &) const = default;
};

struct Span {
  std::string field;
  int start = 0;
  int end = 0;

  auto operator<=>(const Span &) const = default;
  bool operator==(const Span &) const = default;
};

struct Mention {
  std::string doc_id;
  Span span;
  std::string surface;
  Vector embedding;  // empty when not attached

  // Stable identifier "doc_id:field:start-end".
  std::string Id() const;
};

std::string MentionId(std::string_view doc_id, const Span &span);

// Checks the document invariants (non-empty id, fields, unique field names,
// language code shape, UTF-8 text). Throws Error(kInvalidArgument).
void ValidateDocument(const Document &doc);

Document DocumentFromJson(const Json &j);
Json DocumentToJson(const Document &doc);

Json SpanToJson(const Span &span);
Span SpanFromJson(const Json &j);

// Returns the text covered by `span`. Throws Error(kInvalidArgument) for an
// unknown field, an empty or inverted span, or offsets past the field end.
std::string ValidateSpan(const Document &doc, const Span &span);

// Reads a documents JSONL stream. Errors name the offending line number;
// duplicate ids name both lines. `source` is used in messages only.
std::vector<Document> ParseDocuments(std::istream &in,
                                     std::string_view source = "<stream>");
std::vector<Document> LoadDocuments(const std::string &path);
void WriteDocuments(std::ostream &out, const std::vector<Document> &docs);

// Mentions JSONL: {doc_id, field, start, end, surface}.
Json MentionToJson(const Mention &mention);
Mention MentionFromJson(const Json &j);

// Reads every non-blank line of a JSONL file as a JSON value. Throws
// Error(kParse) naming the line number of the first malformed line.
std::vector<Json> ReadJsonLines(const std::string &path);
std::vector<Json> ReadJsonLines(std::istream &in, std::string_view source);
void WriteJsonLines(const std::string &path, const std::vector<Json> &rows);

}  // namespace entex

#endif  // ENTEX_DOCUMENT_H_
