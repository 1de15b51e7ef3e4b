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

#include "entex/clustering.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <unordered_map>

#include "entex/error.h"
#include "entex/extraction.h"
#include "entex/random.h"
#include "entex/text.h"

namespace entex {

namespace {

Error Invalid(const std::string &message) {
  return Error(ErrorCode::kInvalidArgument, message);
}

double Softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

Eigen::Map<const Eigen::VectorXd> AsEigen(const Vector &v) {
  return {v.data(), static_cast<Eigen::Index>(v.size())};
}

}  // namespace

SiameseParams SiameseParams::Identity(int dim) {
  SiameseParams params;
  params.p = Eigen::MatrixXd::Identity(dim, dim);
  return params;
}

void SiameseParams::Validate() const {
  if (p.rows() == 0 || p.rows() != p.cols()) {
    throw Invalid("Siamese projection must be square and non-empty");
  }
  if (!p.allFinite() || !std::isfinite(alpha) || !std::isfinite(beta)) {
    throw Invalid("Siamese parameters must be finite");
  }
  if (!(alpha > 0.0)) throw Invalid("Siamese alpha must be positive");
}

Json SiameseParams::ToJson() const {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    std::vector<double> row(p.cols());
    for (Eigen::Index c = 0; c < p.cols(); ++c) row[c] = p(r, c);
    rows.push_back(row);
  }
  return {{"dim", p.rows()}, {"P", rows}, {"alpha", alpha}, {"beta", beta}};
}

SiameseParams SiameseParams::FromJson(const Json &j) {
  SiameseParams params;
  try {
    int dim = j.at("dim").get<int>();
    const Json &rows = j.at("P");
    if (static_cast<int>(rows.size()) != dim) throw Invalid("P row count");
    params.p.resize(dim, dim);
    for (int r = 0; r < dim; ++r) {
      auto row = rows[r].get<std::vector<double>>();
      if (static_cast<int>(row.size()) != dim) throw Invalid("P column count");
      for (int c = 0; c < dim; ++c) params.p(r, c) = row[c];
    }
    params.alpha = j.at("alpha").get<double>();
    params.beta = j.at("beta").get<double>();
  } catch (const Json::exception &e) {
    throw Invalid(std::string("bad Siamese params: ") + e.what());
  }
  params.Validate();
  return params;
}

SiameseParams LoadSiamese(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  try {
    return SiameseParams::FromJson(Json::parse(in));
  } catch (const Json::parse_error &e) {
    throw Error(ErrorCode::kParse, path + ": " + e.what());
  }
}

void SaveSiamese(const std::string &path, const SiameseParams &params) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << params.ToJson().dump() << '\n';
}

double LinkScore(const Vector &a, const Vector &b,
                 const SiameseParams &params) {
  if (static_cast<Eigen::Index>(a.size()) != params.p.cols() ||
      static_cast<Eigen::Index>(b.size()) != params.p.cols()) {
    throw Invalid("link_score: embedding dim does not match projection");
  }
  Eigen::VectorXd u = params.p * AsEigen(a);
  Eigen::VectorXd v = params.p * AsEigen(b);
  double nu = u.norm(), nv = v.norm();
  double cos = (nu > 0.0 && nv > 0.0) ? u.dot(v) / (nu * nv) : 0.0;
  return Sigmoid(params.alpha * cos + params.beta);
}

double SiameseLoss(const SiameseParams &params,
                   const std::vector<MentionPair> &pairs,
                   SiameseGradient *grad) {
  if (pairs.empty()) throw Invalid("no training pairs");
  const double n = static_cast<double>(pairs.size());
  if (grad != nullptr) {
    grad->p = Eigen::MatrixXd::Zero(params.p.rows(), params.p.cols());
    grad->alpha = 0.0;
    grad->beta = 0.0;
  }
  double loss = 0.0;
  for (const MentionPair &pair : pairs) {
    auto a = AsEigen(pair.a);
    auto b = AsEigen(pair.b);
    Eigen::VectorXd u = params.p * a;
    Eigen::VectorXd v = params.p * b;
    double nu = u.norm(), nv = v.norm();
    bool defined = nu > 0.0 && nv > 0.0;
    double cos = defined ? u.dot(v) / (nu * nv) : 0.0;
    double s = params.alpha * cos + params.beta;
    double y = pair.same ? 1.0 : 0.0;
    loss += Softplus(s) - y * s;
    if (grad == nullptr) continue;
    double g = (Sigmoid(s) - y) / n;
    grad->alpha += g * cos;
    grad->beta += g;
    if (!defined) continue;
    Eigen::VectorXd dcos_du = v / (nu * nv) - cos * u / (nu * nu);
    Eigen::VectorXd dcos_dv = u / (nu * nv) - cos * v / (nv * nv);
    grad->p.noalias() += (g * params.alpha) * dcos_du * a.transpose();
    grad->p.noalias() += (g * params.alpha) * dcos_dv * b.transpose();
  }
  return loss / n;
}

SiameseTrainResult TrainSiamese(const std::vector<MentionPair> &pairs,
                                const SiameseHyper &hyper) {
  if (pairs.empty()) throw Invalid("no training pairs");
  const int dim = static_cast<int>(pairs.front().a.size());
  for (const MentionPair &pair : pairs) {
    if (static_cast<int>(pair.a.size()) != dim ||
        static_cast<int>(pair.b.size()) != dim) {
      throw Invalid("training pairs have inconsistent dims");
    }
  }
  bool has_pos = false, has_neg = false;
  for (const MentionPair &pair : pairs) (pair.same ? has_pos : has_neg) = true;

  SiameseTrainResult result;
  result.params = SiameseParams::Identity(dim);
  bool degenerate = !(has_pos && has_neg);
  if (degenerate) {
    result.warnings.push_back(
        "all training pairs share one label; fitting beta only");
  } else {
    Rng rng(hyper.seed);
    for (int r = 0; r < dim; ++r) {
      for (int c = 0; c < dim; ++c) {
        result.params.p(r, c) += rng.Uniform(-hyper.init_noise, hyper.init_noise);
      }
    }
  }
  SiameseGradient grad;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    double loss = SiameseLoss(result.params, pairs, &grad);
    result.losses.push_back(loss);
    result.params.beta -= hyper.lr * grad.beta;
    if (degenerate) continue;
    result.params.p -= hyper.lr * grad.p;
    // alpha must stay positive for the score to remain a similarity.
    result.params.alpha =
        std::max(1e-3, result.params.alpha - hyper.lr * grad.alpha);
  }
  result.final_loss = SiameseLoss(result.params, pairs, nullptr);
  result.initial_loss =
      result.losses.empty() ? result.final_loss : result.losses.front();
  return result;
}

std::string BlockKey(std::string_view surface) {
  std::string normalized = NormalizeAlias(surface);
  int length = CodepointLength(normalized);
  return length <= 4 ? normalized : SubstrCodepoints(normalized, 0, 4);
}

MentionGraph BuildGraph(const std::vector<Mention> &mentions,
                        const SiameseParams &params, double link_threshold,
                        Blocking blocking) {
  params.Validate();
  const int n = static_cast<int>(mentions.size());
  MentionGraph graph;
  graph.nodes.reserve(n);
  std::vector<std::string> normalized(n);
  std::vector<Eigen::VectorXd> projected(n);
  for (int i = 0; i < n; ++i) {
    const Mention &m = mentions[i];
    if (static_cast<Eigen::Index>(m.embedding.size()) != params.p.cols()) {
      throw Invalid("mention " + m.Id() + " has no embedding of dim " +
                    std::to_string(params.p.cols()));
    }
    graph.nodes.push_back(m.Id());
    normalized[i] = NormalizeAlias(m.surface);
    graph.block_keys.push_back(CodepointLength(normalized[i]) <= 4
                                   ? normalized[i]
                                   : SubstrCodepoints(normalized[i], 0, 4));
    projected[i] = params.p * AsEigen(m.embedding);
    double norm = projected[i].norm();
    if (norm > 0.0) projected[i] /= norm;
  }

  auto consider = [&](int i, int j) {
    if (normalized[i] == normalized[j]) {
      graph.edges.push_back({i, j, 1.0});
      return;
    }
    // Unit (or zero) projections: the dot product is the cosine, or 0.
    double cos = projected[i].dot(projected[j]);
    double score = Sigmoid(params.alpha * cos + params.beta);
    if (score >= link_threshold) graph.edges.push_back({i, j, score});
  };

  if (blocking == Blocking::kNone) {
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) consider(i, j);
    }
  } else {
    std::map<std::string, std::vector<int>> blocks;
    for (int i = 0; i < n; ++i) blocks[graph.block_keys[i]].push_back(i);
    for (const auto &[key, members] : blocks) {
      for (size_t x = 0; x < members.size(); ++x) {
        for (size_t y = x + 1; y < members.size(); ++y) {
          consider(members[x], members[y]);
        }
      }
    }
    std::sort(graph.edges.begin(), graph.edges.end(),
              [](const GraphEdge &l, const GraphEdge &r) {
                return std::tie(l.a, l.b) < std::tie(r.a, r.b);
              });
  }
  return graph;
}

double Modularity(int num_nodes, const std::vector<GraphEdge> &edges,
                  const std::vector<int> &community, double resolution) {
  if (static_cast<int>(community.size()) != num_nodes) {
    throw Invalid("partition size does not match graph");
  }
  double m = 0.0;
  for (const GraphEdge &e : edges) m += e.weight;
  if (m <= 0.0) return 0.0;
  std::unordered_map<int, double> inside, total;
  for (const GraphEdge &e : edges) {
    total[community[e.a]] += e.weight;
    total[community[e.b]] += e.weight;
    if (community[e.a] == community[e.b]) inside[community[e.a]] += e.weight;
  }
  double q = 0.0;
  for (const auto &[c, tot] : total) {
    double frac = tot / (2.0 * m);
    q += inside[c] / m - resolution * frac * frac;
  }
  return q;
}

double Modularity(const MentionGraph &graph, const std::vector<int> &community,
                  double resolution) {
  return Modularity(static_cast<int>(graph.nodes.size()), graph.edges,
                    community, resolution);
}

namespace {

// Weighted undirected graph with self-loops. adj[i] holds (j, A_ij) with
// A_ii counting both orientations of internal weight, so that the degree
// k_i = sum_j A_ij.
struct LevelGraph {
  std::vector<std::vector<std::pair<int, double>>> adj;
  std::vector<double> degree;
  double total = 0.0;  // sum_ij A_ij = 2m
};

LevelGraph FromEdges(int n, const std::vector<GraphEdge> &edges) {
  LevelGraph g;
  g.adj.resize(n);
  g.degree.assign(n, 0.0);
  std::vector<std::map<int, double>> acc(n);
  for (const GraphEdge &e : edges) {
    if (e.a == e.b) throw Invalid("graph has a self-loop");
    if (e.a < 0 || e.b < 0 || e.a >= n || e.b >= n) {
      throw Invalid("edge endpoint out of range");
    }
    acc[e.a][e.b] += e.weight;
    acc[e.b][e.a] += e.weight;
  }
  for (int i = 0; i < n; ++i) {
    for (const auto &[j, w] : acc[i]) {
      g.adj[i].emplace_back(j, w);
      g.degree[i] += w;
    }
    g.total += g.degree[i];
  }
  return g;
}

// One round of local moving. Returns true if any node changed community.
bool LocalMoving(const LevelGraph &g, double resolution,
                 const std::vector<int> &order, std::vector<int> *community) {
  const int n = static_cast<int>(g.adj.size());
  std::vector<double> tot(n, 0.0);
  for (int i = 0; i < n; ++i) tot[(*community)[i]] += g.degree[i];

  std::vector<double> weight_to(n, 0.0);
  std::vector<int> touched;
  bool moved_any = false;
  bool moved = true;
  while (moved) {
    moved = false;
    for (int i : order) {
      int current = (*community)[i];
      double k = g.degree[i];
      touched.clear();
      for (const auto &[j, w] : g.adj[i]) {
        if (j == i) continue;
        int c = (*community)[j];
        if (weight_to[c] == 0.0) touched.push_back(c);
        weight_to[c] += w;
      }
      tot[current] -= k;
      double best_gain = weight_to[current] - resolution * tot[current] * k / g.total;
      int best = current;
      std::sort(touched.begin(), touched.end());
      for (int c : touched) {
        double gain = weight_to[c] - resolution * tot[c] * k / g.total;
        if (gain > best_gain + 1e-12) {
          best_gain = gain;
          best = c;
        }
      }
      tot[best] += k;
      for (int c : touched) weight_to[c] = 0.0;
      weight_to[current] = 0.0;
      if (best != current) {
        (*community)[i] = best;
        moved = true;
        moved_any = true;
      }
    }
  }
  return moved_any;
}

// Renumbers communities 0.. by first appearance; returns the count.
int Renumber(std::vector<int> *community) {
  std::unordered_map<int, int> ids;
  for (int &c : *community) {
    auto [it, inserted] = ids.emplace(c, static_cast<int>(ids.size()));
    c = it->second;
  }
  return static_cast<int>(ids.size());
}

LevelGraph Aggregate(const LevelGraph &g, const std::vector<int> &community,
                     int count) {
  LevelGraph out;
  out.adj.resize(count);
  out.degree.assign(count, 0.0);
  std::vector<std::map<int, double>> acc(count);
  for (size_t i = 0; i < g.adj.size(); ++i) {
    for (const auto &[j, w] : g.adj[i]) {
      acc[community[i]][community[j]] += w;
    }
  }
  for (int c = 0; c < count; ++c) {
    for (const auto &[d, w] : acc[c]) {
      out.adj[c].emplace_back(d, w);
      out.degree[c] += w;
    }
    out.total += out.degree[c];
  }
  return out;
}

}  // namespace

Partition Louvain(int num_nodes, const std::vector<GraphEdge> &edges,
                  const LouvainOptions &options) {
  if (num_nodes <= 0) throw Invalid("louvain: graph is empty");
  Partition result;
  result.community.resize(num_nodes);
  std::iota(result.community.begin(), result.community.end(), 0);
  LevelGraph level = FromEdges(num_nodes, edges);
  if (level.total <= 0.0) {
    result.modularity = 0.0;
    return result;
  }
  Rng rng(options.seed);
  while (true) {
    const int n = static_cast<int>(level.adj.size());
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    if (options.shuffle) {
      for (int i = n - 1; i > 0; --i) {
        std::swap(order[i], order[rng.Below(static_cast<uint64_t>(i) + 1)]);
      }
    }
    std::vector<int> community(n);
    std::iota(community.begin(), community.end(), 0);
    if (!LocalMoving(level, options.resolution, order, &community)) break;
    int count = Renumber(&community);
    for (int &c : result.community) c = community[c];
    level = Aggregate(level, community, count);
    if (count == 1) break;
  }
  Renumber(&result.community);
  result.modularity =
      Modularity(num_nodes, edges, result.community, options.resolution);
  return result;
}

Partition Louvain(const MentionGraph &graph, const LouvainOptions &options) {
  return Louvain(static_cast<int>(graph.nodes.size()), graph.edges, options);
}

std::vector<OpenEntity> Canonicalize(const Partition &partition,
                                     const std::vector<Mention> &mentions) {
  if (partition.community.size() != mentions.size()) {
    throw Invalid("partition does not cover the mention list");
  }
  std::map<int, std::vector<int>> groups;
  for (size_t i = 0; i < mentions.size(); ++i) {
    groups[partition.community[i]].push_back(static_cast<int>(i));
  }
  // Smaller count, then longer, then lexicographically larger loses.
  auto better = [](const std::string &a, int count_a, const std::string &b,
                   int count_b) {
    if (count_a != count_b) return count_a > count_b;
    int la = CodepointLength(a), lb = CodepointLength(b);
    if (la != lb) return la < lb;
    return a < b;
  };

  std::vector<OpenEntity> entities;
  for (auto &[c, members] : groups) {
    std::map<std::string, int> norm_counts;
    std::map<std::string, std::map<std::string, int>> raw_counts;
    std::vector<std::string> surfaces;
    for (int i : members) {
      const std::string &surface = mentions[i].surface;
      std::string norm = NormalizeAlias(surface);
      ++norm_counts[norm];
      ++raw_counts[norm][surface];
      surfaces.push_back(surface);
    }
    const std::string *best_norm = nullptr;
    int best_count = 0;
    for (const auto &[norm, count] : norm_counts) {
      if (!best_norm || better(norm, count, *best_norm, best_count)) {
        best_norm = &norm;
        best_count = count;
      }
    }
    const std::string *best_raw = nullptr;
    best_count = 0;
    for (const auto &[raw, count] : raw_counts[*best_norm]) {
      if (!best_raw || better(raw, count, *best_raw, best_count)) {
        best_raw = &raw;
        best_count = count;
      }
    }
    std::sort(surfaces.begin(), surfaces.end());
    uint64_t h = kFnvOffsetBasis;
    for (const std::string &s : surfaces) {
      h = Fnv1a64(s, h);
      h = Fnv1a64("\x1f", h);
    }
    entities.push_back({"oe_" + Hex64(h), *best_raw, members});
  }
  std::sort(entities.begin(), entities.end(),
            [](const OpenEntity &a, const OpenEntity &b) {
              return a.members.front() < b.members.front();
            });
  return entities;
}

Json OpenEntityToJson(const OpenEntity &entity,
                      const std::vector<Mention> &mentions) {
  Json refs = Json::array();
  for (int i : entity.members) {
    const Mention &m = mentions[i];
    refs.push_back({{"doc_id", m.doc_id},
                    {"field", m.span.field},
                    {"start", m.span.start},
                    {"end", m.span.end}});
  }
  return {{"entity_id", entity.entity_id},
          {"canonical_name", entity.canonical_name},
          {"mentions", refs}};
}

Json EdgeToJson(const MentionGraph &graph, const GraphEdge &edge) {
  return {{"a", graph.nodes[edge.a]}, {"b", graph.nodes[edge.b]},
          {"w", edge.weight}};
}

}  // namespace entex
