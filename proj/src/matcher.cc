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

#include "entex/matcher.h"

#include <algorithm>
#include <deque>
#include <unordered_map>

#include "entex/encoder.h"
#include "entex/error.h"
#include "entex/text.h"

namespace entex {

Json CandidateMentionToJson(const CandidateMention &m) {
  Json candidates = Json::array();
  for (const Candidate &c : m.candidates) {
    candidates.push_back(
        {{"entity_id", c.entity_id}, {"prior", c.prior}, {"count", c.count}});
  }
  return {{"doc_id", m.doc_id},
          {"mention_id", m.mention_id},
          {"field", m.span.field},
          {"start", m.span.start},
          {"end", m.span.end},
          {"surface", m.surface},
          {"alias", m.alias},
          {"candidates", candidates}};
}

CandidateMention CandidateMentionFromJson(const Json &j) {
  CandidateMention m;
  try {
    m.doc_id = j.at("doc_id").get<std::string>();
    m.mention_id = j.at("mention_id").get<std::string>();
    m.span = SpanFromJson(j);
    m.surface = j.at("surface").get<std::string>();
    m.alias = j.value("alias", "");
    for (const Json &c : j.at("candidates")) {
      Candidate cand;
      cand.entity_id = c.at("entity_id").get<std::string>();
      cand.entity_title = c.value("entity_title", "");
      cand.prior = c.at("prior").get<double>();
      cand.count = c.at("count").get<int64_t>();
      m.candidates.push_back(std::move(cand));
    }
  } catch (const Json::exception &e) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("bad candidate mention: ") + e.what());
  }
  return m;
}

CompiledMatcher CompiledMatcher::Compile(const AliasTable &table,
                                         size_t max_dfa_entries) {
  return Compile(std::make_shared<const AliasTable>(table), max_dfa_entries);
}

CompiledMatcher CompiledMatcher::Compile(
    std::shared_ptr<const AliasTable> table, size_t max_dfa_entries) {
  if (!table || table->entries.empty()) {
    throw Error(ErrorCode::kFailedPrecondition,
                "cannot compile an empty alias table");
  }
  CompiledMatcher m;
  m.table_ = std::move(table);

  // Trie construction. Children are kept in a hash map keyed by
  // (state << 8 | byte) until the automaton is frozen.
  std::unordered_map<uint64_t, int> children;
  std::vector<int> output = {-1};
  auto key = [](int state, unsigned char b) {
    return (static_cast<uint64_t>(state) << 8) | b;
  };
  for (const auto &[alias, candidates] : m.table_->entries) {
    int alias_id = static_cast<int>(m.aliases_.size());
    m.aliases_.push_back(alias);
    m.candidate_begin_.push_back(static_cast<int>(m.candidate_pool_.size()));
    m.candidate_pool_.insert(m.candidate_pool_.end(), candidates.begin(),
                             candidates.end());
    m.max_alias_tokens_ = std::max(
        m.max_alias_tokens_, static_cast<int>(Tokenize(alias).size()));
    int state = 0;
    for (unsigned char b : alias) {
      auto [it, inserted] =
          children.emplace(key(state, b), static_cast<int>(output.size()));
      if (inserted) output.push_back(-1);
      state = it->second;
    }
    output[state] = alias_id;
  }
  m.candidate_begin_.push_back(static_cast<int>(m.candidate_pool_.size()));
  const int num_states = static_cast<int>(output.size());

  // Freeze into CSR.
  std::vector<std::vector<std::pair<unsigned char, int>>> edges(num_states);
  for (const auto &[k, child] : children) {
    edges[static_cast<int>(k >> 8)].emplace_back(
        static_cast<unsigned char>(k & 0xFF), child);
  }
  for (auto &e : edges) std::sort(e.begin(), e.end());
  m.edge_begin_.assign(num_states + 1, 0);
  for (int s = 0; s < num_states; ++s) {
    m.edge_begin_[s + 1] = m.edge_begin_[s] + static_cast<int>(edges[s].size());
  }
  m.edge_byte_.reserve(children.size());
  m.edge_target_.reserve(children.size());
  for (int s = 0; s < num_states; ++s) {
    for (const auto &[b, child] : edges[s]) {
      m.edge_byte_.push_back(b);
      m.edge_target_.push_back(child);
    }
  }
  m.root_next_.fill(0);
  for (const auto &[b, child] : edges[0]) m.root_next_[b] = child;

  // Failure and dictionary links by BFS.
  m.fail_.assign(num_states, 0);
  m.dict_link_.assign(num_states, -1);
  m.output_ = std::move(output);
  std::deque<int> queue;
  for (const auto &[b, child] : edges[0]) queue.push_back(child);
  while (!queue.empty()) {
    int s = queue.front();
    queue.pop_front();
    for (const auto &[b, child] : edges[s]) {
      int target = s == 0 ? 0 : m.Next(m.fail_[s], b);
      m.fail_[child] = target;
      m.dict_link_[child] =
          m.output_[target] >= 0 ? target : m.dict_link_[target];
      queue.push_back(child);
    }
  }
  // Bytes that never occur in an alias share one class.
  std::array<bool, 256> used{};
  for (unsigned char b : m.edge_byte_) used[b] = true;
  m.num_classes_ = 1;
  for (int b = 0; b < 256; ++b) {
    m.byte_class_[b] = used[b] ? static_cast<uint8_t>(m.num_classes_++) : 0;
  }
  const size_t c = static_cast<size_t>(m.num_classes_);
  if (static_cast<size_t>(num_states) * c <= max_dfa_entries) {
    std::array<int, 256> class_byte{};
    for (int b = 255; b >= 0; --b) class_byte[m.byte_class_[b]] = b;
    m.dfa_.assign(static_cast<size_t>(num_states) * c, 0);
    // BFS order guarantees fail targets are filled before their users.
    std::vector<int> order = {0};
    for (size_t i = 0; i < order.size(); ++i) {
      int s = order[i];
      for (size_t k = 0; k < c; ++k) {
        int next;
        if (k == 0) {
          next = 0;
        } else if (s == 0) {
          next = m.root_next_[class_byte[k]];
        } else {
          next = -1;
          for (int e = m.edge_begin_[s]; e < m.edge_begin_[s + 1]; ++e) {
            if (m.edge_byte_[e] == class_byte[k]) next = m.edge_target_[e];
          }
          if (next < 0) {
            next = m.dfa_[static_cast<size_t>(m.fail_[s]) * c + k] /
                   static_cast<int>(c);
          }
        }
        m.dfa_[static_cast<size_t>(s) * c + k] = next * static_cast<int>(c);
      }
      for (int e = m.edge_begin_[s]; e < m.edge_begin_[s + 1]; ++e) {
        order.push_back(m.edge_target_[e]);
      }
    }
    // Targets that report something are stored negated.
    for (int &entry : m.dfa_) {
      int t = entry / static_cast<int>(c);
      if (m.output_[t] >= 0 || m.dict_link_[t] >= 0) entry = ~entry;
    }
  }
  return m;
}

int CompiledMatcher::Next(int state, unsigned char byte) const {
  while (true) {
    if (state == 0) return root_next_[byte];
    int lo = edge_begin_[state], hi = edge_begin_[state + 1];
    while (lo < hi) {
      int mid = (lo + hi) / 2;
      if (edge_byte_[mid] < byte) {
        lo = mid + 1;
      } else {
        hi = mid;
      }
    }
    if (lo < edge_begin_[state + 1] && edge_byte_[lo] == byte) {
      return edge_target_[lo];
    }
    state = fail_[state];
  }
}

template <typename Emit>
void CompiledMatcher::ScanImpl(std::string_view normalized,
                               const char *accept_end, Emit &&emit) const {
  auto report = [&](size_t i, int state) {
    if (accept_end != nullptr && !accept_end[i]) return;
    int s = output_[state] >= 0 ? state : dict_link_[state];
    while (s > 0) {
      emit(static_cast<int>(i + 1), output_[s]);
      s = dict_link_[s];
    }
  };
  if (!dfa_.empty()) {
    const int c = num_classes_;
    int row = 0;
    for (size_t i = 0; i < normalized.size(); ++i) {
      row = dfa_[row + byte_class_[static_cast<unsigned char>(normalized[i])]];
      if (row < 0) {
        row = ~row;
        report(i, row / c);
      }
    }
    return;
  }
  int state = 0;
  for (size_t i = 0; i < normalized.size(); ++i) {
    state = Next(state, static_cast<unsigned char>(normalized[i]));
    report(i, state);
  }
}

void CompiledMatcher::Scan(
    std::string_view normalized,
    const std::function<void(int byte_end, int alias)> &emit) const {
  ScanImpl(normalized, nullptr, emit);
}

std::vector<FieldMatch> CompiledMatcher::MatchField(
    std::string_view text, OverlapPolicy policy) const {
  std::vector<FieldMatch> matches;
  if (text.empty()) return matches;
  std::u32string source = DecodeUtf8(text);
  NormalizedText norm = NormalizeWithOffsets(source);
  if (norm.text.empty()) return matches;

  const size_t n = source.size();
  std::vector<char> token_start(n + 1, 0), token_end(n + 1, 0);
  for (const auto &[start, end] : TokenBounds(source)) {
    token_start[start] = 1;
    token_end[end] = 1;
  }
  // Per normalized byte: a match may begin here / end just after here.
  std::vector<char> begin_ok(norm.text.size(), 0), end_ok(norm.text.size(), 0);
  for (const NormalizedText::Unit &u : norm.units) {
    if (u.byte_begin == u.byte_end) continue;
    begin_ok[u.byte_begin] = token_start[u.orig_begin];
    end_ok[u.byte_end - 1] = token_end[u.orig_end];
  }

  ScanImpl(norm.text, end_ok.data(), [&](int byte_end, int alias) {
    int byte_begin = byte_end - static_cast<int>(aliases_[alias].size());
    if (byte_begin < 0 || !begin_ok[byte_begin]) return;
    int start = norm.units[norm.byte_unit[byte_begin]].orig_begin;
    int end = norm.units[norm.byte_unit[byte_end - 1]].orig_end;
    matches.push_back({start, end, alias});
  });

  std::sort(matches.begin(), matches.end(),
            [](const FieldMatch &a, const FieldMatch &b) {
              return std::tie(a.start, a.end, a.alias) <
                     std::tie(b.start, b.end, b.alias);
            });
  if (policy == OverlapPolicy::kLongestPerStart) {
    std::vector<FieldMatch> kept;
    for (size_t i = 0; i < matches.size(); ++i) {
      if (i + 1 < matches.size() && matches[i + 1].start == matches[i].start) {
        continue;
      }
      kept.push_back(matches[i]);
    }
    matches.swap(kept);
  }
  return matches;
}

std::vector<CandidateMention> CompiledMatcher::FindCandidates(
    const Document &doc, OverlapPolicy policy) const {
  std::vector<CandidateMention> out;
  std::vector<size_t> byte_at;  // scalar offset -> byte offset
  for (const Field &field : doc.fields) {
    std::vector<FieldMatch> matches = MatchField(field.text, policy);
    if (matches.empty()) continue;
    byte_at.clear();
    for (size_t i = 0; i < field.text.size(); ++i) {
      if ((static_cast<unsigned char>(field.text[i]) & 0xC0) != 0x80) {
        byte_at.push_back(i);
      }
    }
    byte_at.push_back(field.text.size());
    out.reserve(out.size() + matches.size());
    for (const FieldMatch &match : matches) {
      CandidateMention m;
      m.doc_id = doc.id;
      m.span = {field.name, match.start, match.end};
      m.mention_id = MentionId(doc.id, m.span);
      m.surface = field.text.substr(byte_at[match.start],
                                    byte_at[match.end] - byte_at[match.start]);
      m.alias = aliases_[match.alias];
      m.candidates.assign(
          candidate_pool_.begin() + candidate_begin_[match.alias],
          candidate_pool_.begin() + candidate_begin_[match.alias + 1]);
      out.push_back(std::move(m));
    }
  }
  return out;
}

Json LabelingTask::ToJson() const {
  Json mentions_json = Json::array();
  for (const CandidateMention &m : mentions) {
    Json choices = Json::array();
    for (const Candidate &c : m.candidates) {
      choices.push_back({{"entity_id", c.entity_id},
                         {"entity_title", c.entity_title},
                         {"prior", c.prior}});
    }
    choices.push_back({{"entity_id", nullptr}, {"label", "none of these"}});
    mentions_json.push_back({{"mention_id", m.mention_id},
                             {"field", m.span.field},
                             {"start", m.span.start},
                             {"end", m.span.end},
                             {"surface", m.surface},
                             {"choices", choices}});
  }
  return {{"task_id", task_id},
          {"kind", "closed_world"},
          {"document", DocumentToJson(doc)},
          {"auto_skippable", auto_skippable},
          {"mentions", mentions_json}};
}

LabelingTask CandidatesToTask(const std::vector<CandidateMention> &mentions,
                              const Document &doc) {
  LabelingTask task;
  task.task_id = "cw-" + doc.id;
  task.doc = doc;
  task.mentions = mentions;
  task.auto_skippable = mentions.empty();
  return task;
}

}  // namespace entex
