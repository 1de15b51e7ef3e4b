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

// Independent reference implementations used by the unit and acceptance
// tests. None of these call the code they check.

#ifndef ENTEX_TESTS_ORACLES_H_
#define ENTEX_TESTS_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include "entex/encoder.h"
#include "entex/matcher.h"
#include "entex/random.h"
#include "entex/text.h"

namespace entex::oracle {

// FNV-1a 64 with the textbook constants, one byte at a time.
inline uint64_t Fnv(const std::string &s) {
  uint64_t h = 14695981039346656037ULL;
  for (size_t i = 0; i < s.size(); ++i) {
    h = h ^ static_cast<uint8_t>(s[i]);
    h = h * 1099511628211ULL;
  }
  return h;
}

inline double Sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// All maximal runs of scores > threshold, as inclusive index pairs, with
// lengths in [lo, hi]. Enumerates every (i, j) and tests maximality.
inline std::vector<std::pair<int, int>> DecodeRuns(
    const std::vector<double> &p, double threshold, int lo, int hi) {
  std::vector<std::pair<int, int>> out;
  int n = static_cast<int>(p.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      bool all = true;
      for (int k = i; k <= j; ++k) all = all && p[k] > threshold;
      if (!all) continue;
      bool left = i == 0 || !(p[i - 1] > threshold);
      bool right = j == n - 1 || !(p[j + 1] > threshold);
      int len = j - i + 1;
      if (left && right && len >= lo && len <= hi) out.push_back({i, j});
    }
  }
  return out;
}

struct Edge {
  int a, b;
  double w;
};

// Modularity from the dense adjacency matrix.
inline double Modularity(int n, const std::vector<Edge> &edges,
                         const std::vector<int> &c, double gamma = 1.0) {
  std::vector<std::vector<double>> adj(n, std::vector<double>(n, 0.0));
  for (const Edge &e : edges) {
    adj[e.a][e.b] += e.w;
    adj[e.b][e.a] += e.w;
  }
  std::vector<double> k(n, 0.0);
  double two_m = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) k[i] += adj[i][j];
    two_m += k[i];
  }
  if (two_m == 0.0) return 0.0;
  double q = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (c[i] == c[j]) q += adj[i][j] - gamma * k[i] * k[j] / two_m;
    }
  }
  return q / two_m;
}

// Maximum modularity over every set partition (restricted growth strings).
inline double MaxModularity(int n, const std::vector<Edge> &edges,
                            std::vector<int> *best_partition = nullptr) {
  std::vector<int> c(n, 0);
  double best = -1e300;
  std::function<void(int, int)> rec = [&](int i, int used) {
    if (i == n) {
      double q = Modularity(n, edges, c);
      if (q > best) {
        best = q;
        if (best_partition) *best_partition = c;
      }
      return;
    }
    for (int g = 0; g <= used; ++g) {
      c[i] = g;
      rec(i + 1, std::max(used, g + 1));
    }
  };
  if (n == 0) return 0.0;
  rec(0, 0);
  return best;
}

// Naive scan: for every alias and every byte offset of the normalized
// field, test for an occurrence, then apply the alignment, token-boundary
// and overlap rules.
struct NaiveMatch {
  std::string field;
  int start, end;
  std::string alias;
  bool operator<(const NaiveMatch &o) const {
    return std::tie(field, start, end, alias) <
           std::tie(o.field, o.start, o.end, o.alias);
  }
  bool operator==(const NaiveMatch &o) const {
    return !(*this < o) && !(o < *this);
  }
};

inline std::vector<NaiveMatch> NaiveFind(const Document &doc,
                                         const std::vector<std::string> &aliases,
                                         bool longest_per_start) {
  std::vector<NaiveMatch> out;
  for (const Field &f : doc.fields) {
    std::u32string src = DecodeUtf8(f.text);
    NormalizedText norm = NormalizeWithOffsets(src);
    std::set<int> starts, ends;
    for (const Token &t : Tokenize(f.text)) {
      starts.insert(t.start);
      ends.insert(t.end);
    }
    std::vector<NaiveMatch> found;
    for (const std::string &a : aliases) {
      if (a.empty()) continue;
      for (size_t pos = 0; pos + a.size() <= norm.text.size(); ++pos) {
        if (norm.text.compare(pos, a.size(), a) != 0) continue;
        int b = static_cast<int>(pos), e = static_cast<int>(pos + a.size());
        // Both edges must sit on unit edges of the normalized text.
        bool ok_b = false, ok_e = false;
        int ub = -1, ue = -1;
        for (size_t u = 0; u < norm.units.size(); ++u) {
          if (norm.units[u].byte_begin == b) ok_b = true, ub = u;
          if (norm.units[u].byte_end == e) ok_e = true, ue = u;
        }
        if (!ok_b || !ok_e) continue;
        int s = norm.units[ub].orig_begin, t = norm.units[ue].orig_end;
        if (!starts.count(s) || !ends.count(t)) continue;
        found.push_back({f.name, s, t, a});
      }
    }
    std::sort(found.begin(), found.end());
    if (longest_per_start) {
      std::map<int, NaiveMatch> best;
      for (const NaiveMatch &m : found) {
        auto it = best.find(m.start);
        if (it == best.end() || m.end > it->second.end ||
            (m.end == it->second.end && it->second.alias < m.alias)) {
          best.insert_or_assign(m.start, m);
        }
      }
      found.clear();
      for (auto &[s, m] : best) found.push_back(m);
    }
    out.insert(out.end(), found.begin(), found.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

struct ScoredCandidate {
  std::string id;
  double prior;
  double score;
};

// Sort by the full decision key and take the first.
inline std::optional<std::string> ResolveOracle(
    std::vector<ScoredCandidate> c, double threshold) {
  if (c.empty()) return std::nullopt;
  std::stable_sort(c.begin(), c.end(), [](const auto &x, const auto &y) {
    if (x.score != y.score) return x.score > y.score;
    if (x.prior != y.prior) return x.prior > y.prior;
    return x.id < y.id;
  });
  if (c[0].score < threshold) return std::nullopt;
  return c[0].id;
}

// Maximum relative error between an analytic gradient and central
// differences, |a - n| / max(1e-6, |a| + |n|) as a symmetric ratio.
inline double RelError(double analytic, double numeric) {
  double denom = std::max(std::fabs(analytic) + std::fabs(numeric), 1e-6);
  return std::fabs(analytic - numeric) / denom;
}

inline double CentralDifference(const std::function<double()> &f, double *x,
                                double eps = 1e-4) {
  double saved = *x;
  *x = saved + eps;
  double up = f();
  *x = saved - eps;
  double down = f();
  *x = saved;
  return (up - down) / (2.0 * eps);
}

inline std::filesystem::path TempDir(const std::string &name) {
  auto dir = std::filesystem::temp_directory_path() /
             ("entex-" + name + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace entex::oracle

#endif  // ENTEX_TESTS_ORACLES_H_
