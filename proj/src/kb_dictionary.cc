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

#include "entex/kb_dictionary.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "entex/error.h"
#include "entex/text.h"

namespace entex {

namespace {

constexpr char kChecksumPrefix[] = "#checksum fnv1a64:";

Error Corrupt(const std::string &message) {
  return Error(ErrorCode::kCorrupt, message);
}

std::string RequireTitle(const Json &j, const char *key) {
  std::string value = j.at(key).get<std::string>();
  if (value.empty()) {
    throw Error(ErrorCode::kParse, std::string("empty ") + key);
  }
  if (!IsValidUtf8(value)) {
    throw Error(ErrorCode::kParse, std::string(key) + " is not valid UTF-8");
  }
  return value;
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

}  // namespace

DumpRecord DumpRecordFromJson(const Json &j) {
  try {
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "page") {
      return PageRecord{RequireTitle(j, "id"), RequireTitle(j, "title")};
    }
    if (kind == "redirect") {
      return RedirectRecord{RequireTitle(j, "from_title"),
                            RequireTitle(j, "to_title")};
    }
    if (kind == "disambiguation") {
      DisambiguationRecord r{RequireTitle(j, "title"), {}};
      for (const Json &t : j.at("targets")) {
        std::string target = t.get<std::string>();
        if (target.empty()) throw Error(ErrorCode::kParse, "empty target");
        r.targets.push_back(std::move(target));
      }
      return r;
    }
    if (kind == "anchor_count") {
      AnchorCountRecord r{RequireTitle(j, "alias"),
                          RequireTitle(j, "entity_title"),
                          j.at("count").get<int64_t>()};
      if (r.count < 1) throw Error(ErrorCode::kParse, "count must be >= 1");
      return r;
    }
    throw Error(ErrorCode::kParse, "unknown record kind '" + kind + "'");
  } catch (const Json::exception &e) {
    throw Error(ErrorCode::kParse, std::string("bad dump record: ") + e.what());
  }
}

Json DumpRecordToJson(const DumpRecord &record) {
  return std::visit(
      Overloaded{
          [](const PageRecord &r) -> Json {
            return {{"kind", "page"}, {"id", r.id}, {"title", r.title}};
          },
          [](const RedirectRecord &r) -> Json {
            return {{"kind", "redirect"},
                    {"from_title", r.from_title},
                    {"to_title", r.to_title}};
          },
          [](const DisambiguationRecord &r) -> Json {
            return {{"kind", "disambiguation"},
                    {"title", r.title},
                    {"targets", r.targets}};
          },
          [](const AnchorCountRecord &r) -> Json {
            return {{"kind", "anchor_count"},
                    {"alias", r.alias},
                    {"entity_title", r.entity_title},
                    {"count", r.count}};
          }},
      record);
}

std::vector<DumpRecord> LoadDumpRecords(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::vector<DumpRecord> records;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(DumpRecordFromJson(Json::parse(line)));
    } catch (const Json::parse_error &e) {
      throw Error(ErrorCode::kParse, path + ": record " +
                                         std::to_string(line_no) + ": " +
                                         e.what());
    } catch (const Error &e) {
      throw Error(ErrorCode::kParse, path + ": record " +
                                         std::to_string(line_no) + ": " +
                                         e.what());
    }
  }
  return records;
}

RedirectResolution ResolveRedirects(
    const std::map<std::string, std::string> &redirects,
    const std::set<std::string> &pages, int max_depth) {
  RedirectResolution out;
  std::set<std::vector<std::string>> cycles;
  for (const auto &[source, first_target] : redirects) {
    std::vector<std::string> chain = {source};
    std::string next = first_target;
    int hops = 1;
    while (true) {
      auto loop = std::find(chain.begin(), chain.end(), next);
      if (loop != chain.end()) {
        std::vector<std::string> cycle(loop, chain.end());
        std::sort(cycle.begin(), cycle.end());
        if (loop == chain.begin()) {
          cycles.insert(std::move(cycle));
        } else {
          cycles.insert(std::move(cycle));
          out.in_cycle_chain.push_back(source);
        }
        break;
      }
      if (hops > max_depth) {
        out.depth_exceeded.push_back(source);
        break;
      }
      auto it = redirects.find(next);
      if (it != redirects.end()) {
        chain.push_back(next);
        next = it->second;
        ++hops;
        continue;
      }
      if (pages.count(next)) {
        out.resolved.emplace(source, next);
      } else {
        out.dangling.push_back(source);
      }
      break;
    }
  }
  out.cycles.assign(cycles.begin(), cycles.end());
  return out;
}

const std::vector<Candidate> *AliasTable::Find(const std::string &alias) const {
  auto it = entries.find(alias);
  return it == entries.end() ? nullptr : &it->second;
}

void AliasTable::Validate() const {
  if (version != kAliasTableVersion) {
    throw Error(ErrorCode::kFailedPrecondition,
                "unsupported alias table version '" + version + "'");
  }
  for (const auto &[alias, candidates] : entries) {
    if (alias.empty()) throw Corrupt("empty alias");
    if (candidates.empty()) throw Corrupt("alias '" + alias + "' has no candidates");
    double sum = 0.0;
    for (size_t i = 0; i < candidates.size(); ++i) {
      const Candidate &c = candidates[i];
      if (!(c.prior > 0.0 && c.prior <= 1.0)) {
        throw Corrupt("alias '" + alias + "': prior out of (0,1]");
      }
      if (c.count < 1) throw Corrupt("alias '" + alias + "': count < 1");
      auto reg = entities.find(c.entity_id);
      if (reg == entities.end()) {
        throw Corrupt("alias '" + alias + "': unknown entity " + c.entity_id);
      }
      if (reg->second != c.entity_title) {
        throw Corrupt("alias '" + alias + "': title mismatch for " +
                      c.entity_id);
      }
      if (i > 0) {
        const Candidate &p = candidates[i - 1];
        bool ordered = p.prior > c.prior ||
                       (p.prior == c.prior && p.entity_id < c.entity_id);
        if (!ordered) throw Corrupt("alias '" + alias + "': candidates unsorted");
      }
      sum += c.prior;
    }
    if (std::fabs(sum - 1.0) > 1e-9) {
      throw Corrupt("alias '" + alias + "': priors sum to " +
                    std::to_string(sum));
    }
  }
}

Json AliasTable::ToJson() const {
  Json aliases = Json::object();
  for (const auto &[alias, candidates] : entries) {
    Json list = Json::array();
    for (const Candidate &c : candidates) {
      list.push_back({{"entity_id", c.entity_id},
                      {"entity_title", c.entity_title},
                      {"prior", c.prior},
                      {"count", c.count}});
    }
    aliases[alias] = std::move(list);
  }
  return {{"version", version}, {"entities", entities}, {"aliases", aliases}};
}

AliasTable AliasTable::FromJson(const Json &j) {
  AliasTable table;
  try {
    table.version = j.at("version").get<std::string>();
    if (table.version != kAliasTableVersion) {
      throw Error(ErrorCode::kFailedPrecondition,
                  "unsupported alias table version '" + table.version + "'");
    }
    table.entities =
        j.at("entities").get<std::map<std::string, std::string>>();
    for (const auto &[alias, list] : j.at("aliases").items()) {
      std::vector<Candidate> &candidates = table.entries[alias];
      for (const Json &c : list) {
        candidates.push_back({c.at("entity_id").get<std::string>(),
                              c.at("entity_title").get<std::string>(),
                              c.at("prior").get<double>(),
                              c.at("count").get<int64_t>()});
      }
    }
  } catch (const Json::exception &e) {
    throw Corrupt(std::string("bad alias table: ") + e.what());
  }
  table.Validate();
  return table;
}

Json BuildStats::ToJson() const {
  return {{"pages", pages},
          {"redirects", redirects},
          {"redirects_resolved", redirects_resolved},
          {"redirects_dropped", redirects_dropped},
          {"cycles", cycles},
          {"disambiguations", disambiguations},
          {"anchors", anchors},
          {"anchors_dropped", anchors_dropped},
          {"aliases_dropped", aliases_dropped},
          {"aliases", aliases},
          {"entities", entities}};
}

bool RejectAlias(const std::string &normalized, const CleanupOptions &options) {
  if (normalized.empty()) return options.drop_empty;
  if (options.max_alias_length > 0 &&
      CodepointLength(normalized) > options.max_alias_length) {
    return true;
  }
  if (options.drop_numeric_punct) {
    bool all = true;
    for (char32_t c : DecodeUtf8(normalized)) {
      if (!IsDigit(c) && !IsPunctuation(c) && !IsWhitespace(c)) {
        all = false;
        break;
      }
    }
    if (all) return true;
  }
  return false;
}

BuildResult BuildAliasTable(const std::vector<DumpRecord> &records,
                            const BuildOptions &options) {
  BuildResult result;
  BuildStats &stats = result.stats;

  // Fold the stream into order-independent maps; conflicting duplicates are
  // settled by lexicographic order so the outcome never depends on input
  // order.
  std::map<std::string, std::string> title_to_id;
  std::map<std::string, std::string> id_to_title;
  std::map<std::string, std::string> redirects;
  std::map<std::string, std::set<std::string>> disambiguations;
  std::map<std::pair<std::string, std::string>, int64_t> anchors;
  for (const DumpRecord &record : records) {
    std::visit(
        Overloaded{
            [&](const PageRecord &r) {
              auto [it, inserted] = title_to_id.emplace(r.title, r.id);
              if (!inserted && r.id < it->second) it->second = r.id;
            },
            [&](const RedirectRecord &r) {
              auto [it, inserted] = redirects.emplace(r.from_title, r.to_title);
              if (!inserted && r.to_title < it->second) it->second = r.to_title;
            },
            [&](const DisambiguationRecord &r) {
              disambiguations[r.title].insert(r.targets.begin(),
                                              r.targets.end());
            },
            [&](const AnchorCountRecord &r) {
              anchors[{r.alias, r.entity_title}] += r.count;
              ++stats.anchors;
            }},
        record);
  }

  // Real pages: neither redirect sources nor disambiguation pages.
  std::set<std::string> pages;
  for (const auto &[title, id] : title_to_id) {
    if (redirects.count(title) || disambiguations.count(title)) continue;
    auto [it, inserted] = id_to_title.emplace(id, title);
    if (!inserted) {
      result.warnings.push_back("entity id " + id + " has several titles; '" +
                                it->second + "' kept");
      continue;
    }
    pages.insert(title);
  }
  for (const auto &[id, title] : id_to_title) result.table.entities[id] = title;
  stats.pages = static_cast<int64_t>(title_to_id.size());
  stats.entities = static_cast<int64_t>(id_to_title.size());
  stats.redirects = static_cast<int64_t>(redirects.size());
  stats.disambiguations = static_cast<int64_t>(disambiguations.size());

  result.redirects =
      ResolveRedirects(redirects, pages, options.max_redirect_depth);
  stats.redirects_resolved =
      static_cast<int64_t>(result.redirects.resolved.size());
  stats.redirects_dropped = stats.redirects - stats.redirects_resolved;
  stats.cycles = static_cast<int64_t>(result.redirects.cycles.size());

  auto resolve = [&](const std::string &title) -> const std::string * {
    if (pages.count(title)) return &title_to_id.at(title);
    auto it = result.redirects.resolved.find(title);
    if (it != result.redirects.resolved.end()) {
      return &title_to_id.at(it->second);
    }
    return nullptr;
  };

  // alias -> entity id -> summed anchor count (0 for structural only)
  std::map<std::string, std::map<std::string, int64_t>> tallies;
  std::set<std::string> rejected;
  auto add = [&](const std::string &alias_text, const std::string &entity_id,
                 int64_t count) {
    std::string alias = NormalizeAlias(alias_text);
    if (RejectAlias(alias, options.cleanup)) {
      rejected.insert(alias);
      return;
    }
    tallies[alias][entity_id] += count;
  };

  for (const std::string &title : pages) {
    add(title, title_to_id.at(title), 0);
  }
  for (const auto &[source, target] : result.redirects.resolved) {
    add(source, title_to_id.at(target), 0);
  }
  for (const auto &[title, targets] : disambiguations) {
    for (const std::string &target : targets) {
      if (const std::string *id = resolve(target)) {
        add(title, *id, 0);
      } else {
        result.warnings.push_back("disambiguation '" + title +
                                  "': unresolvable target '" + target + "'");
      }
    }
  }
  for (const auto &[key, count] : anchors) {
    if (const std::string *id = resolve(key.second)) {
      add(key.first, *id, count);
    } else {
      ++stats.anchors_dropped;
    }
  }
  stats.aliases_dropped = static_cast<int64_t>(rejected.size());

  for (const auto &[alias, per_entity] : tallies) {
    int64_t total = 0;
    std::vector<Candidate> candidates;
    for (const auto &[id, anchors] : per_entity) {
      int64_t count = anchors > 0 ? anchors : 1;
      total += count;
      candidates.push_back({id, id_to_title.at(id), 0.0, count});
    }
    for (Candidate &c : candidates) {
      c.prior = static_cast<double>(c.count) / static_cast<double>(total);
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate &a, const Candidate &b) {
                if (a.prior != b.prior) return a.prior > b.prior;
                return a.entity_id < b.entity_id;
              });
    result.table.entries.emplace(alias, std::move(candidates));
  }
  stats.aliases = static_cast<int64_t>(result.table.entries.size());
  if (result.table.entries.empty()) {
    throw Error(ErrorCode::kFailedPrecondition,
                "alias table is empty after clean-up");
  }
  result.table.Validate();
  return result;
}

std::string SerializeTable(const AliasTable &table) {
  std::string body = table.ToJson().dump();
  return body + "\n" + kChecksumPrefix + Hex64(Fnv1a64(body)) + "\n";
}

AliasTable DeserializeTable(const std::string &contents) {
  size_t newline = contents.find('\n');
  if (newline == std::string::npos) {
    throw Corrupt("alias table checksum line missing (truncated file?)");
  }
  std::string body = contents.substr(0, newline);
  std::string trailer = contents.substr(newline + 1);
  while (!trailer.empty() && (trailer.back() == '\n' || trailer.back() == '\r')) {
    trailer.pop_back();
  }
  const std::string prefix = kChecksumPrefix;
  if (trailer.compare(0, prefix.size(), prefix) != 0) {
    throw Corrupt("alias table checksum line missing (truncated file?)");
  }
  if (trailer.substr(prefix.size()) != Hex64(Fnv1a64(body))) {
    throw Corrupt("alias table checksum mismatch");
  }
  Json j;
  try {
    j = Json::parse(body);
  } catch (const Json::parse_error &e) {
    throw Corrupt(std::string("alias table is not JSON: ") + e.what());
  }
  return AliasTable::FromJson(j);
}

void SaveTable(const std::string &path, const AliasTable &table) {
  table.Validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << SerializeTable(table);
}

AliasTable LoadTable(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return DeserializeTable(buffer.str());
}

}  // namespace entex
