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

// Open-world entity discovery: a Siamese link scorer over mention
// embeddings, a thresholded mention graph, Louvain community detection and
// canonical naming of the resulting communities.

#ifndef ENTEX_CLUSTERING_H_
#define ENTEX_CLUSTERING_H_

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "entex/document.h"

namespace entex {

// score(a, b) = sigmoid(alpha * cos(P a, P b) + beta)
struct SiameseParams {
  Eigen::MatrixXd p;  // dim x dim, shared by both inputs
  double alpha = 8.0;
  double beta = -4.0;

  static SiameseParams Identity(int dim);
  void Validate() const;
  Json ToJson() const;
  static SiameseParams FromJson(const Json &j);
};

SiameseParams LoadSiamese(const std::string &path);
void SaveSiamese(const std::string &path, const SiameseParams &params);

// A zero projection contributes cos = 0.
double LinkScore(const Vector &a, const Vector &b, const SiameseParams &params);

struct MentionPair {
  Vector a;
  Vector b;
  bool same = false;
};

struct SiameseGradient {
  Eigen::MatrixXd p;
  double alpha = 0.0;
  double beta = 0.0;
};

// Mean binary cross-entropy of LinkScore over the pairs.
double SiameseLoss(const SiameseParams &params,
                   const std::vector<MentionPair> &pairs,
                   SiameseGradient *grad);

struct SiameseHyper {
  double lr = 0.05;
  int epochs = 200;
  uint64_t seed = 23;
  double init_noise = 0.01;  // P = I + uniform[-noise, noise]
};

struct SiameseTrainResult {
  SiameseParams params;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> losses;
  std::vector<std::string> warnings;
};

// With only one label present the fit degenerates; only beta is trained
// and a warning is recorded.
SiameseTrainResult TrainSiamese(const std::vector<MentionPair> &pairs,
                                const SiameseHyper &hyper);

enum class Blocking { kNone, kNormalizedSurface };

struct GraphEdge {
  int a = 0;  // a < b
  int b = 0;
  double weight = 0.0;

  bool operator==(const GraphEdge &) const = default;
};

struct MentionGraph {
  std::vector<std::string> nodes;       // mention ids
  std::vector<std::string> block_keys;  // per node
  std::vector<GraphEdge> edges;         // sorted by (a, b)
};

// First four scalars of the normalized surface.
std::string BlockKey(std::string_view surface);

// Pairs whose normalized surfaces are equal are linked with weight 1. Other
// pairs (all of them, or only those sharing a block key) are scored and kept
// when the score reaches `link_threshold`.
MentionGraph BuildGraph(const std::vector<Mention> &mentions,
                        const SiameseParams &params, double link_threshold,
                        Blocking blocking);

struct Partition {
  std::vector<int> community;  // node -> community, numbered 0.. in order
                               // of first appearance
  double modularity = 0.0;
};

// Q = 1/(2m) sum_ij [A_ij - resolution * k_i k_j / (2m)] delta(c_i, c_j).
// Zero for a graph without edge weight.
double Modularity(const MentionGraph &graph, const std::vector<int> &community,
                  double resolution = 1.0);
double Modularity(int num_nodes, const std::vector<GraphEdge> &edges,
                  const std::vector<int> &community, double resolution = 1.0);

struct LouvainOptions {
  double resolution = 1.0;
  // Nodes are visited in ascending id order unless shuffling is requested.
  bool shuffle = false;
  uint64_t seed = 0;
};

// Two-phase Louvain: local moving from singletons, then aggregation,
// repeated until a level produces no move.
Partition Louvain(const MentionGraph &graph, const LouvainOptions &options = {});
Partition Louvain(int num_nodes, const std::vector<GraphEdge> &edges,
                  const LouvainOptions &options = {});

struct OpenEntity {
  std::string entity_id;
  std::string canonical_name;
  std::vector<int> members;  // indices into the mention list, ascending
};

// The canonical name is the most frequent raw surface of the most frequent
// normalized surface; ties go to the shorter string, then lexicographic
// order. The id hashes the sorted member surfaces.
std::vector<OpenEntity> Canonicalize(const Partition &partition,
                                     const std::vector<Mention> &mentions);

// {entity_id, canonical_name, mentions:[{doc_id, field, start, end}]}
Json OpenEntityToJson(const OpenEntity &entity,
                      const std::vector<Mention> &mentions);

// {a, b, w} with node ids.
Json EdgeToJson(const MentionGraph &graph, const GraphEdge &edge);

}  // namespace entex

#endif  // ENTEX_CLUSTERING_H_
