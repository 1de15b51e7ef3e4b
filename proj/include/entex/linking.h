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

// Closed-world linking. Each (mention, candidate) pair is described by four
// features
//   f1 = (Q m) . e         projected mention embedding against the entity
//   f2 = mention score     extraction confidence, 0 when absent
//   f3 = log(1 + count)    link count from the dictionary
//   f4 = prior             P(entity | alias)
// and scored by a one-hidden-layer network
//   score = sigmoid(w2 . relu(W1 f + b1) + b2),  W1: 16 x 4.
// A mention resolves to its best candidate or to NIL below nil_threshold.

#ifndef ENTEX_LINKING_H_
#define ENTEX_LINKING_H_

#include <Eigen/Dense>

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "entex/document.h"
#include "entex/encoder.h"
#include "entex/matcher.h"

namespace entex {

constexpr int kLinkFeatures = 4;
constexpr int kLinkHidden = 16;
inline constexpr char kEntityEmbeddingVersion[] = "entex-entity-embeddings/1";

struct EntityEmbedding {
  std::string entity_id;
  Vector vector;              // unit norm or all zero
  std::string source_digest;  // FNV-1a-64 hex of the source text
};

using EntityEmbeddingStore = std::map<std::string, EntityEmbedding>;

struct EmbedResult {
  std::vector<EntityEmbedding> embeddings;  // in entity id order
  std::vector<std::string> warnings;
};

// Mean-pools the reference encoding of each entity's description.
EmbedResult EmbedEntities(const std::map<std::string, std::string> &texts,
                          const Encoder &encoder);

// JSONL: a header line {"version", "dim"} followed by
// {"entity_id", "vector", "digest"} rows.
void SaveEntityEmbeddings(const std::string &path,
                          const std::vector<EntityEmbedding> &embeddings);
EntityEmbeddingStore LoadEntityEmbeddings(const std::string &path);

struct LinkFeatures {
  double similarity = 0.0;     // f1
  double mention_score = 0.0;  // f2
  double log_count = 0.0;      // f3
  double prior = 0.0;          // f4

  Eigen::Vector4d AsVector() const {
    return {similarity, mention_score, log_count, prior};
  }
};

struct LinkerParams {
  Eigen::MatrixXd q;   // dim x dim mention projection
  Eigen::MatrixXd w1;  // 16 x 4
  Eigen::VectorXd b1;  // 16
  Eigen::VectorXd w2;  // 16
  double b2 = 0.0;
  double nil_threshold = 0.5;

  // Q = I, network all zero.
  static LinkerParams Zero(int dim);
  void Validate() const;
  int dim() const { return static_cast<int>(q.rows()); }

  Json ToJson() const;
  static LinkerParams FromJson(const Json &j);
};

LinkerParams LoadLinker(const std::string &path);
void SaveLinker(const std::string &path, const LinkerParams &params);

LinkFeatures ComputeLinkFeatures(const Vector &mention, const Vector &entity,
                                 double prior, int64_t count,
                                 double mention_score,
                                 const LinkerParams &params);

double ScoreFeatures(const LinkFeatures &features, const LinkerParams &params);

double ScoreLink(const Vector &mention, const EntityEmbedding &entity,
                 double prior, int64_t count, double mention_score,
                 const LinkerParams &params);

struct CandidateScore {
  std::string entity_id;
  double prior = 0.0;
  double score = 0.0;
};

struct Resolution {
  std::optional<std::string> entity_id;  // nullopt = NIL
  double score = 0.0;                    // best candidate score (0 if none)
  std::vector<CandidateScore> candidates;  // scored candidates, input order
  std::vector<std::string> warnings;
};

// Argmax over candidate scores with ties broken by higher prior, then
// smaller entity id. NIL when the best score is below the threshold or no
// candidate has an embedding.
Resolution Resolve(const CandidateMention &mention, const Vector &embedding,
                   const EntityEmbeddingStore &entities,
                   const LinkerParams &params, double mention_score = 0.0);

// Same decision rule on pre-computed scores.
Resolution ResolveScores(std::vector<CandidateScore> scores,
                         double nil_threshold);

// {doc_id, mention_id, entity_id | null, score}
Json ResolutionToJson(const std::string &doc_id, const std::string &mention_id,
                      const Resolution &resolution);

// One training example. When both raw embeddings are present f1 is
// recomputed from Q (and Q receives gradient); otherwise the stored f1 is
// used as is.
struct LinkExample {
  LinkFeatures features;
  Vector mention;
  Vector entity;
  int label = 0;
  double weight = 1.0;
};

struct LinkerGradient {
  Eigen::MatrixXd q;
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::VectorXd w2;
  double b2 = 0.0;
};

// (1/N) sum_i weight_i * BCE(score_i, label_i).
double LinkerLoss(const LinkerParams &params,
                  const std::vector<LinkExample> &examples,
                  LinkerGradient *grad);

struct LinkerHyper {
  double lr = 0.5;
  int epochs = 500;
  uint64_t seed = 29;
  bool train_q = true;
  double nil_threshold = 0.5;
};

struct LinkerTrainResult {
  LinkerParams params;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  std::vector<double> losses;
};

// Throws Error(kInvalidArgument) when only one label is present.
LinkerTrainResult TrainLinker(const std::vector<LinkExample> &examples,
                              int dim, const LinkerHyper &hyper);

}  // namespace entex

#endif  // ENTEX_LINKING_H_
