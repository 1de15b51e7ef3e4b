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

// Closed-world alias dictionary built from knowledge-base dump records.
//
// Dump records (JSONL, one per line):
//   {"kind": "page", "id": "Q42", "title": "Joe Biden"}
//   {"kind": "redirect", "from_title": "Biden", "to_title": "Joe Biden"}
//   {"kind": "disambiguation", "title": "Mercury", "targets": ["...", ...]}
//   {"kind": "anchor_count", "alias": "apple", "entity_title": "Apple Inc",
//    "count": 30}
//
// Dictionary file: line 1 is the table as compact JSON
//   {"version": "entex-aliases/1",
//    "entities": {"<id>": "<title>", ...},
//    "aliases": {"<alias>": [{"entity_id", "entity_title", "prior",
//                             "count"}, ...], ...}}
// line 2 is "#checksum fnv1a64:<16 hex digits>" computed over line 1
// (without its newline).

#ifndef ENTEX_KB_DICTIONARY_H_
#define ENTEX_KB_DICTIONARY_H_

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "entex/document.h"

namespace entex {

inline constexpr char kAliasTableVersion[] = "entex-aliases/1";

struct PageRecord {
  std::string id;
  std::string title;
};
struct RedirectRecord {
  std::string from_title;
  std::string to_title;
};
struct DisambiguationRecord {
  std::string title;
  std::vector<std::string> targets;
};
struct AnchorCountRecord {
  std::string alias;
  std::string entity_title;
  int64_t count = 1;
};

using DumpRecord = std::variant<PageRecord, RedirectRecord,
                                DisambiguationRecord, AnchorCountRecord>;

// Throws Error(kParse) on schema violations.
DumpRecord DumpRecordFromJson(const Json &j);
Json DumpRecordToJson(const DumpRecord &record);

// Reads a dump JSONL file; errors name the record index (1-based line).
std::vector<DumpRecord> LoadDumpRecords(const std::string &path);

struct RedirectResolution {
  std::map<std::string, std::string> resolved;  // source -> final page
  std::vector<std::vector<std::string>> cycles;  // each sorted, deduplicated
  std::vector<std::string> dangling;             // sources dropped
  std::vector<std::string> depth_exceeded;       // sources dropped
  std::vector<std::string> in_cycle_chain;       // sources leading into a
                                                 // cycle (dropped)
};

// Follows each redirect chain to a page. Chains that loop, end outside
// `pages`, or exceed `max_depth` hops are dropped whole and reported.
RedirectResolution ResolveRedirects(
    const std::map<std::string, std::string> &redirects,
    const std::set<std::string> &pages, int max_depth = 16);

struct Candidate {
  std::string entity_id;
  std::string entity_title;
  double prior = 0.0;  // P(entity | alias)
  int64_t count = 0;

  bool operator==(const Candidate &) const = default;
};

struct AliasTable {
  std::map<std::string, std::vector<Candidate>> entries;  // normalized alias
  std::map<std::string, std::string> entities;            // id -> title
  std::string version = kAliasTableVersion;

  const std::vector<Candidate> *Find(const std::string &alias) const;

  // Priors sum to one per alias, candidates ordered by (prior desc, id asc),
  // every candidate registered. Throws Error(kCorrupt).
  void Validate() const;

  Json ToJson() const;
  static AliasTable FromJson(const Json &j);  // validates

  bool operator==(const AliasTable &) const = default;
};

struct CleanupOptions {
  bool drop_empty = true;
  int max_alias_length = 64;  // scalars; 0 disables
  bool drop_numeric_punct = true;
};

struct BuildOptions {
  CleanupOptions cleanup;
  int max_redirect_depth = 16;
};

struct BuildStats {
  int64_t pages = 0;
  int64_t redirects = 0;
  int64_t redirects_resolved = 0;
  int64_t redirects_dropped = 0;
  int64_t cycles = 0;
  int64_t disambiguations = 0;
  int64_t anchors = 0;
  int64_t anchors_dropped = 0;
  int64_t aliases_dropped = 0;
  int64_t aliases = 0;
  int64_t entities = 0;

  Json ToJson() const;
};

struct BuildResult {
  AliasTable table;
  BuildStats stats;
  RedirectResolution redirects;
  std::vector<std::string> warnings;
};

// Independent of record order. Throws Error(kFailedPrecondition) when the
// table ends up empty.
BuildResult BuildAliasTable(const std::vector<DumpRecord> &records,
                            const BuildOptions &options = {});

// True if the alias should be dropped under `options`.
bool RejectAlias(const std::string &normalized, const CleanupOptions &options);

void SaveTable(const std::string &path, const AliasTable &table);
// Throws Error(kCorrupt) on checksum mismatch or invariant violation and
// Error(kFailedPrecondition) on an unsupported version.
AliasTable LoadTable(const std::string &path);

std::string SerializeTable(const AliasTable &table);
AliasTable DeserializeTable(const std::string &contents);

}  // namespace entex

#endif  // ENTEX_KB_DICTIONARY_H_
