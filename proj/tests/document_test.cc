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

#include <gtest/gtest.h>

#include <sstream>

#include "entex/error.h"
#include "entex/random.h"
#include "entex/text.h"

namespace entex {
namespace {

Document Doc(const std::string &title) {
  return {"d1", DocType::kAd, "en", {{"title", title}}};
}

TEST(LoadDocuments, SingleLine) {
  std::istringstream in(
      R"({"id":"d1","doc_type":"ad","language":"en","fields":[{"name":"title","text":"Red shoes"}]})"
      "\n");
  auto docs = ParseDocuments(in);
  ASSERT_EQ(docs.size(), 1u);
  EXPECT_EQ(docs[0].fields.size(), 1u);
  EXPECT_EQ(docs[0].fields[0].text, "Red shoes");
}

TEST(LoadDocuments, EmptyStream) {
  std::istringstream in("");
  EXPECT_TRUE(ParseDocuments(in).empty());
}

TEST(LoadDocuments, DuplicateIdNamesBothLines) {
  std::string line =
      R"({"id":"d1","doc_type":"ad","language":"en","fields":[{"name":"t","text":"x"}]})";
  std::istringstream in(line + "\n" + line + "\n");
  try {
    ParseDocuments(in);
    FAIL();
  } catch (const Error &e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("2"), std::string::npos) << msg;
  }
}

TEST(LoadDocuments, MalformedLineNamesLine) {
  std::istringstream in(
      R"({"id":"d1","doc_type":"ad","language":"en","fields":[{"name":"t","text":"x"}]})"
      "\n{oops\n");
  try {
    ParseDocuments(in, "f.jsonl");
    FAIL();
  } catch (const Error &e) {
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
  }
}

TEST(LoadDocuments, RejectsUnknownDocType) {
  std::istringstream in(
      R"({"id":"d1","doc_type":"blog","language":"en","fields":[{"name":"t","text":"x"}]})");
  EXPECT_THROW(ParseDocuments(in), Error);
}

TEST(ValidateDocument, Invariants) {
  Document d = Doc("x");
  EXPECT_NO_THROW(ValidateDocument(d));
  d.id = "";
  EXPECT_THROW(ValidateDocument(d), Error);
  d = Doc("x");
  d.fields.clear();
  EXPECT_THROW(ValidateDocument(d), Error);
  d = Doc("x");
  d.fields.push_back({"title", "y"});
  EXPECT_THROW(ValidateDocument(d), Error);
  d = Doc("");
  EXPECT_NO_THROW(ValidateDocument(d));  // empty text is allowed
}

TEST(ValidateSpan, Examples) {
  Document d = Doc("Joe Biden visited");
  EXPECT_EQ(ValidateSpan(d, {"title", 0, 9}), "Joe Biden");
  EXPECT_EQ(ValidateSpan(d, {"title", 4, 9}), "Biden");
  EXPECT_THROW(ValidateSpan(d, {"title", 0, 0}), Error);
  EXPECT_THROW(ValidateSpan(d, {"title", 5, 3}), Error);
  EXPECT_THROW(ValidateSpan(d, {"title", 0, 99}), Error);
  EXPECT_THROW(ValidateSpan(d, {"body", 0, 1}), Error);
}

TEST(ValidateSpan, CountsScalarsNotBytes) {
  Document d = Doc("Caf\xC3\xA9 noir");
  EXPECT_EQ(ValidateSpan(d, {"title", 0, 4}), "Caf\xC3\xA9");
  EXPECT_EQ(ValidateSpan(d, {"title", 5, 9}), "noir");
}

TEST(MentionId, Format) {
  EXPECT_EQ(MentionId("d1", {"title", 0, 9}), "d1:title:0-9");
}

TEST(RoundTrip, WriteThenParse) {
  Rng rng(3);
  const std::vector<std::string> words = {"red", "Caf\xC3\xA9", "\xE6\x97\xA5",
                                          "shoes", "!"};
  std::vector<Document> docs;
  for (int i = 0; i < 50; ++i) {
    Document d;
    d.id = "d" + std::to_string(i);
    d.doc_type = static_cast<DocType>(rng.Below(3));
    d.language = i % 2 ? "fr" : "en";
    for (const char *name : {"title", "body"}) {
      std::string text;
      int n = static_cast<int>(rng.Below(6));
      for (int j = 0; j < n; ++j) {
        if (j) text += ' ';
        text += words[rng.Below(words.size())];
      }
      d.fields.push_back({name, text});
    }
    docs.push_back(d);
  }
  std::stringstream buf;
  WriteDocuments(buf, docs);
  EXPECT_EQ(ParseDocuments(buf), docs);
}

TEST(RoundTrip, MentionSurfaceRederivable) {
  Rng rng(11);
  Document d = Doc("Joe Biden met Caf\xC3\xA9 owners in \xE6\x97\xA5\xE6\x9C\xAC");
  int len = CodepointLength(d.fields[0].text);
  for (int i = 0; i < 200; ++i) {
    int a = static_cast<int>(rng.Below(len));
    int b = a + 1 + static_cast<int>(rng.Below(len - a));
    Mention m{d.id, {"title", a, b}, ValidateSpan(d, {"title", a, b}), {}};
    Mention back = MentionFromJson(MentionToJson(m));
    EXPECT_EQ(ValidateSpan(d, back.span), back.surface);
  }
}

}  // namespace
}  // namespace entex
