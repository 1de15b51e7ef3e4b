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

#include "entex/document.h"

#include <fstream>
#include <regex>
#include <set>
#include <unordered_map>

#include "entex/error.h"
#include "entex/text.h"

namespace entex {

namespace {

Error Invalid(const std::string &message) {
  return Error(ErrorCode::kInvalidArgument, message);
}

bool ValidLanguage(const std::string &code) {
  static const std::regex pattern("[a-z]{2,3}(-[a-z0-9]{2,8})*");
  return std::regex_match(code, pattern);
}

}  // namespace

const char *DocTypeName(DocType type) {
  switch (type) {
    case DocType::kAd: return "ad";
    case DocType::kWebPage: return "web_page";
    case DocType::kUgc: return "ugc";
  }
  return "ad";
}

DocType ParseDocType(std::string_view name) {
  if (name == "ad") return DocType::kAd;
  if (name == "web_page") return DocType::kWebPage;
  if (name == "ugc") return DocType::kUgc;
  throw Invalid("unknown doc_type '" + std::string(name) + "'");
}

const Field *Document::FindField(std::string_view name) const {
  for (const Field &f : fields) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

std::string MentionId(std::string_view doc_id, const Span &span) {
  return std::string(doc_id) + ":" + span.field + ":" +
         std::to_string(span.start) + "-" + std::to_string(span.end);
}

std::string Mention::Id() const { return MentionId(doc_id, span); }

void ValidateDocument(const Document &doc) {
  if (doc.id.empty()) throw Invalid("document id is empty");
  if (!ValidLanguage(doc.language)) {
    throw Invalid("document " + doc.id + ": bad language code '" +
                  doc.language + "'");
  }
  if (doc.fields.empty()) throw Invalid("document " + doc.id + " has no fields");
  std::set<std::string_view> names;
  for (const Field &f : doc.fields) {
    if (f.name.empty()) {
      throw Invalid("document " + doc.id + " has a field with empty name");
    }
    if (!names.insert(f.name).second) {
      throw Invalid("document " + doc.id + ": duplicate field '" + f.name +
                    "'");
    }
    if (!IsValidUtf8(f.text)) {
      throw Invalid("document " + doc.id + ": field '" + f.name +
                    "' is not valid UTF-8");
    }
  }
}

Document DocumentFromJson(const Json &j) {
  if (!j.is_object()) throw Invalid("document must be a JSON object");
  Document doc;
  try {
    doc.id = j.at("id").get<std::string>();
    doc.doc_type = ParseDocType(j.at("doc_type").get<std::string>());
    doc.language = j.at("language").get<std::string>();
    for (const Json &f : j.at("fields")) {
      doc.fields.push_back(
          {f.at("name").get<std::string>(), f.at("text").get<std::string>()});
    }
  } catch (const Json::exception &e) {
    throw Invalid(std::string("bad document: ") + e.what());
  }
  ValidateDocument(doc);
  return doc;
}

Json DocumentToJson(const Document &doc) {
  Json fields = Json::array();
  for (const Field &f : doc.fields) {
    fields.push_back({{"name", f.name}, {"text", f.text}});
  }
  return {{"id", doc.id},
          {"doc_type", DocTypeName(doc.doc_type)},
          {"language", doc.language},
          {"fields", fields}};
}

Json SpanToJson(const Span &span) {
  return {{"field", span.field}, {"start", span.start}, {"end", span.end}};
}

Span SpanFromJson(const Json &j) {
  try {
    return {j.at("field").get<std::string>(), j.at("start").get<int>(),
            j.at("end").get<int>()};
  } catch (const Json::exception &e) {
    throw Invalid(std::string("bad span: ") + e.what());
  }
}

std::string ValidateSpan(const Document &doc, const Span &span) {
  const Field *field = doc.FindField(span.field);
  if (field == nullptr) {
    throw Invalid("document " + doc.id + " has no field '" + span.field + "'");
  }
  if (span.start < 0 || span.start >= span.end) {
    throw Invalid("empty or inverted span [" + std::to_string(span.start) +
                  "," + std::to_string(span.end) + ")");
  }
  int length = CodepointLength(field->text);
  if (span.end > length) {
    throw Invalid("span end " + std::to_string(span.end) +
                  " exceeds field length " + std::to_string(length));
  }
  return SubstrCodepoints(field->text, span.start, span.end);
}

std::vector<Json> ReadJsonLines(std::istream &in, std::string_view source) {
  std::vector<Json> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      rows.push_back(Json::parse(line));
    } catch (const Json::parse_error &e) {
      throw Error(ErrorCode::kParse, std::string(source) + ":" +
                                         std::to_string(line_no) +
                                         ": malformed JSON: " + e.what());
    }
  }
  return rows;
}

std::vector<Json> ReadJsonLines(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return ReadJsonLines(in, path);
}

void WriteJsonLines(const std::string &path, const std::vector<Json> &rows) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  for (const Json &row : rows) out << row.dump() << '\n';
}

std::vector<Document> ParseDocuments(std::istream &in,
                                     std::string_view source) {
  std::vector<Document> docs;
  std::unordered_map<std::string, int> first_line;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::string where = std::string(source) + ":" + std::to_string(line_no);
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::parse_error &e) {
      throw Error(ErrorCode::kParse, where + ": malformed JSON: " + e.what());
    }
    Document doc;
    try {
      doc = DocumentFromJson(j);
    } catch (const Error &e) {
      throw Error(e.code(), where + ": " + e.what());
    }
    auto [it, inserted] = first_line.emplace(doc.id, line_no);
    if (!inserted) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string(source) + ": duplicate document id '" + doc.id +
                      "' on lines " + std::to_string(it->second) + " and " +
                      std::to_string(line_no));
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<Document> LoadDocuments(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return ParseDocuments(in, path);
}

void WriteDocuments(std::ostream &out, const std::vector<Document> &docs) {
  for (const Document &doc : docs) out << DocumentToJson(doc).dump() << '\n';
}

Json MentionToJson(const Mention &mention) {
  return {{"doc_id", mention.doc_id},
          {"field", mention.span.field},
          {"start", mention.span.start},
          {"end", mention.span.end},
          {"surface", mention.surface}};
}

Mention MentionFromJson(const Json &j) {
  Mention m;
  try {
    m.doc_id = j.at("doc_id").get<std::string>();
    m.span = SpanFromJson(j);
    m.surface = j.at("surface").get<std::string>();
    if (j.contains("embedding")) m.embedding = j["embedding"].get<Vector>();
  } catch (const Json::exception &e) {
    throw Invalid(std::string("bad mention: ") + e.what());
  }
  return m;
}

}  // namespace entex
