# Copyright 2026 The Entex Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Entity extraction, clustering, linking and label aggregation."""

from entex._entex import (
    EntexError,
    Extractor,
    Matcher,
    aggregate_spans,
    build_alias_table,
    decode_runs,
    encode_text,
    exact_match_f1,
    louvain,
    modularity,
    normalize_alias,
    resolve_scores,
    span_prf,
    tokenize,
)

__all__ = [
    "EntexError",
    "Extractor",
    "Matcher",
    "aggregate_spans",
    "build_alias_table",
    "decode_runs",
    "encode_text",
    "exact_match_f1",
    "louvain",
    "modularity",
    "normalize_alias",
    "resolve_scores",
    "span_prf",
    "tokenize",
]
