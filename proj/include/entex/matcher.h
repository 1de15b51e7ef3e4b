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

// Dictionary-driven candidate generation. Aliases are compiled into an
// Aho-Corasick automaton over normalized UTF-8; document fields are
// normalized with an offset map, scanned once, and every occurrence whose
// edges fall on token boundaries of the original text is reported with the
// alias's candidate entities.

#ifndef ENTEX_MATCHER_H_
#define ENTEX_MATCHER_H_

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "entex/document.h"
#include "entex/kb_dictionary.h"

namespace entex {

struct CandidateMention {
  std::string mention_id;
  std::string doc_id;
  Span span;
  std::string surface;
  std::string alias;  // normalized dictionary key that matched
  std::vector<Candidate> candidates;  // descending prior

  bool operator==(const CandidateMention &) const = default;
};

// {doc_id, mention_id, field, start, end, surface, candidates:[{entity_id,
// prior, count}]}
Json CandidateMentionToJson(const CandidateMention &m);
CandidateMention CandidateMentionFromJson(const Json &j);

enum class OverlapPolicy {
  // Among occurrences sharing a left edge only the longest is kept;
  // occurrences with distinct left edges are all kept.
  kLongestPerStart,
  kAll,
};

// A scalar-offset occurrence within one field.
struct FieldMatch {
  int start = 0;
  int end = 0;
  int alias = 0;  // index into CompiledMatcher::aliases()

  bool operator==(const FieldMatch &) const = default;
};

class CompiledMatcher {
 public:
  // A full transition table is built when states x byte classes stays
  // within this many entries; larger automata walk sparse transitions.
  static constexpr size_t kDefaultMaxDfaEntries = size_t{1} << 25;

  // Throws Error(kFailedPrecondition) for an empty table.
  static CompiledMatcher Compile(
      std::shared_ptr<const AliasTable> table,
      size_t max_dfa_entries = kDefaultMaxDfaEntries);
  static CompiledMatcher Compile(
      const AliasTable &table,
      size_t max_dfa_entries = kDefaultMaxDfaEntries);

  std::vector<CandidateMention> FindCandidates(
      const Document &doc,
      OverlapPolicy policy = OverlapPolicy::kLongestPerStart) const;

  // Matches in one field's text, sorted by (start, end).
  std::vector<FieldMatch> MatchField(
      std::string_view text,
      OverlapPolicy policy = OverlapPolicy::kLongestPerStart) const;

  // Reports (byte_end, alias) for every occurrence in normalized text.
  void Scan(std::string_view normalized,
            const std::function<void(int byte_end, int alias)> &emit) const;

  const std::vector<std::string> &aliases() const { return aliases_; }
  const AliasTable &table() const { return *table_; }
  int max_alias_tokens() const { return max_alias_tokens_; }
  size_t num_states() const { return fail_.size(); }
  bool dense() const { return !dfa_.empty(); }

 private:
  CompiledMatcher() = default;

  int Next(int state, unsigned char byte) const;

  // Scan core. Occurrences ending at byte i + 1 are reported only when
  // accept_end[i] is set, or for every end when accept_end is null.
  template <typename Emit>
  void ScanImpl(std::string_view normalized, const char *accept_end,
                Emit &&emit) const;

  std::shared_ptr<const AliasTable> table_;
  std::vector<std::string> aliases_;
  // Candidate lists copied into one array; alias i owns
  // [candidate_begin_[i], candidate_begin_[i + 1]).
  std::vector<Candidate> candidate_pool_;
  std::vector<int> candidate_begin_;
  int max_alias_tokens_ = 0;

  std::array<int, 256> root_next_{};
  // Non-root transitions in CSR form, sorted by byte within a state.
  std::vector<int> edge_begin_;
  std::vector<unsigned char> edge_byte_;
  std::vector<int> edge_target_;
  std::vector<int> fail_;
  std::vector<int> output_;     // alias id ending here, or -1
  std::vector<int> dict_link_;  // nearest proper suffix state with output

  // Full transition table over byte classes, built when it fits the memory
  // budget. Entries are target states premultiplied by num_classes_.
  std::array<uint8_t, 256> byte_class_{};
  int num_classes_ = 0;
  std::vector<int> dfa_;
};

// Closed-world multiple-choice task built from candidate mentions.
struct LabelingTask {
  std::string task_id;
  Document doc;
  std::vector<CandidateMention> mentions;  // order preserved
  bool auto_skippable = false;

  // Rater-facing payload. Each mention lists its candidates followed by a
  // "none of these" choice whose entity_id is null.
  Json ToJson() const;
};

LabelingTask CandidatesToTask(const std::vector<CandidateMention> &mentions,
                              const Document &doc);

}  // namespace entex

#endif  // ENTEX_MATCHER_H_
