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

#include "entex/linking.h"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "entex/error.h"
#include "entex/extraction.h"
#include "entex/random.h"
#include "entex/text.h"

namespace entex {

namespace {

Error Invalid(const std::string &message) {
  return Error(ErrorCode::kInvalidArgument, message);
}

Eigen::Map<const Eigen::VectorXd> AsEigen(const Vector &v) {
  return {v.data(), static_cast<Eigen::Index>(v.size())};
}

double Softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

Json MatrixRows(const Eigen::MatrixXd &m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(m.cols());
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[c] = m(r, c);
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd ParseRows(const Json &j, Eigen::Index rows, Eigen::Index cols) {
  if (static_cast<Eigen::Index>(j.size()) != rows) throw Invalid("row count");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    auto row = j[r].get<std::vector<double>>();
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw Invalid("column count");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[c];
  }
  return m;
}

}  // namespace

EmbedResult EmbedEntities(const std::map<std::string, std::string> &texts,
                          const Encoder &encoder) {
  EmbedResult result;
  for (const auto &[id, text] : texts) {
    EntityEmbedding e;
    e.entity_id = id;
    e.source_digest = Hex64(Fnv1a64(text));
    TokenEncoding enc = encoder.EncodeText(text);
    if (enc.tokens.empty()) {
      result.warnings.push_back("entity " + id +
                                " has empty text; zero embedding");
      e.vector.assign(encoder.dim(), 0.0);
    } else {
      e.vector = PoolAll(enc);
    }
    result.embeddings.push_back(std::move(e));
  }
  return result;
}

void SaveEntityEmbeddings(const std::string &path,
                          const std::vector<EntityEmbedding> &embeddings) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  size_t dim = embeddings.empty() ? 0 : embeddings.front().vector.size();
  out << Json{{"version", kEntityEmbeddingVersion}, {"dim", dim}}.dump()
      << '\n';
  for (const EntityEmbedding &e : embeddings) {
    out << Json{{"entity_id", e.entity_id},
                {"vector", e.vector},
                {"digest", e.source_digest}}
               .dump()
        << '\n';
  }
}

EntityEmbeddingStore LoadEntityEmbeddings(const std::string &path) {
  std::vector<Json> rows = ReadJsonLines(path);
  if (rows.empty() || rows.front().value("version", "") !=
                          std::string(kEntityEmbeddingVersion)) {
    throw Error(ErrorCode::kFailedPrecondition,
                path + ": missing or unsupported embeddings header");
  }
  size_t dim = rows.front().at("dim").get<size_t>();
  EntityEmbeddingStore store;
  for (size_t i = 1; i < rows.size(); ++i) {
    EntityEmbedding e;
    e.entity_id = rows[i].at("entity_id").get<std::string>();
    e.vector = rows[i].at("vector").get<Vector>();
    e.source_digest = rows[i].value("digest", "");
    if (e.vector.size() != dim) {
      throw Error(ErrorCode::kCorrupt,
                  path + ": embedding of " + e.entity_id + " has wrong dim");
    }
    double norm = AsEigen(e.vector).norm();
    if (norm != 0.0 && std::fabs(norm - 1.0) > 1e-6) {
      throw Error(ErrorCode::kCorrupt,
                  path + ": embedding of " + e.entity_id + " is not unit norm");
    }
    store.emplace(e.entity_id, std::move(e));
  }
  return store;
}

LinkerParams LinkerParams::Zero(int dim) {
  LinkerParams p;
  p.q = Eigen::MatrixXd::Identity(dim, dim);
  p.w1 = Eigen::MatrixXd::Zero(kLinkHidden, kLinkFeatures);
  p.b1 = Eigen::VectorXd::Zero(kLinkHidden);
  p.w2 = Eigen::VectorXd::Zero(kLinkHidden);
  return p;
}

void LinkerParams::Validate() const {
  if (q.rows() == 0 || q.rows() != q.cols()) throw Invalid("Q must be square");
  if (w1.rows() != kLinkHidden || w1.cols() != kLinkFeatures ||
      b1.size() != kLinkHidden || w2.size() != kLinkHidden) {
    throw Invalid("linker network must be 16 x 4");
  }
  if (!q.allFinite() || !w1.allFinite() || !b1.allFinite() ||
      !w2.allFinite() || !std::isfinite(b2)) {
    throw Invalid("linker parameters must be finite");
  }
  if (!(nil_threshold >= 0.0 && nil_threshold <= 1.0)) {
    throw Invalid("nil_threshold must lie in [0,1]");
  }
}

Json LinkerParams::ToJson() const {
  return {{"feature_schema", "sim,mention_score,log1p_count,prior/1"},
          {"dim", dim()},
          {"Q", MatrixRows(q)},
          {"W1", MatrixRows(w1)},
          {"b1", std::vector<double>(b1.data(), b1.data() + b1.size())},
          {"w2", std::vector<double>(w2.data(), w2.data() + w2.size())},
          {"b2", b2},
          {"nil_threshold", nil_threshold}};
}

LinkerParams LinkerParams::FromJson(const Json &j) {
  LinkerParams p;
  try {
    int dim = j.at("dim").get<int>();
    p.q = ParseRows(j.at("Q"), dim, dim);
    p.w1 = ParseRows(j.at("W1"), kLinkHidden, kLinkFeatures);
    auto b1 = j.at("b1").get<std::vector<double>>();
    auto w2 = j.at("w2").get<std::vector<double>>();
    if (b1.size() != kLinkHidden || w2.size() != kLinkHidden) {
      throw Invalid("linker hidden size must be 16");
    }
    p.b1 = Eigen::Map<Eigen::VectorXd>(b1.data(), kLinkHidden);
    p.w2 = Eigen::Map<Eigen::VectorXd>(w2.data(), kLinkHidden);
    p.b2 = j.at("b2").get<double>();
    p.nil_threshold = j.value("nil_threshold", 0.5);
  } catch (const Json::exception &e) {
    throw Invalid(std::string("bad linker params: ") + e.what());
  }
  p.Validate();
  return p;
}

LinkerParams LoadLinker(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  try {
    return LinkerParams::FromJson(Json::parse(in));
  } catch (const Json::parse_error &e) {
    throw Error(ErrorCode::kParse, path + ": " + e.what());
  }
}

void SaveLinker(const std::string &path, const LinkerParams &params) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << params.ToJson().dump() << '\n';
}

LinkFeatures ComputeLinkFeatures(const Vector &mention, const Vector &entity,
                                 double prior, int64_t count,
                                 double mention_score,
                                 const LinkerParams &params) {
  if (static_cast<int>(mention.size()) != params.dim() ||
      static_cast<int>(entity.size()) != params.dim()) {
    throw Invalid("link features: embedding dim does not match Q");
  }
  LinkFeatures f;
  f.similarity = (params.q * AsEigen(mention)).dot(AsEigen(entity));
  f.mention_score = std::clamp(mention_score, 0.0, 1.0);
  f.log_count = std::log1p(static_cast<double>(std::max<int64_t>(count, 0)));
  f.prior = prior;
  return f;
}

double ScoreFeatures(const LinkFeatures &features, const LinkerParams &params) {
  Eigen::VectorXd hidden = params.w1 * features.AsVector() + params.b1;
  return Sigmoid(params.w2.dot(hidden.cwiseMax(0.0)) + params.b2);
}

double ScoreLink(const Vector &mention, const EntityEmbedding &entity,
                 double prior, int64_t count, double mention_score,
                 const LinkerParams &params) {
  return ScoreFeatures(ComputeLinkFeatures(mention, entity.vector, prior,
                                           count, mention_score, params),
                       params);
}

Resolution ResolveScores(std::vector<CandidateScore> scores,
                         double nil_threshold) {
  Resolution r;
  const CandidateScore *best = nullptr;
  for (const CandidateScore &c : scores) {
    bool better = best == nullptr || c.score > best->score ||
                  (c.score == best->score &&
                   (c.prior > best->prior ||
                    (c.prior == best->prior && c.entity_id < best->entity_id)));
    if (better) best = &c;
  }
  if (best != nullptr) {
    r.score = best->score;
    if (best->score >= nil_threshold) r.entity_id = best->entity_id;
  }
  r.candidates = std::move(scores);
  return r;
}

Resolution Resolve(const CandidateMention &mention, const Vector &embedding,
                   const EntityEmbeddingStore &entities,
                   const LinkerParams &params, double mention_score) {
  if (mention.candidates.empty()) {
    throw Invalid("mention " + mention.mention_id + " has no candidates");
  }
  std::vector<CandidateScore> scores;
  std::vector<std::string> warnings;
  for (const Candidate &c : mention.candidates) {
    auto it = entities.find(c.entity_id);
    if (it == entities.end()) {
      warnings.push_back("no embedding for entity " + c.entity_id +
                         "; candidate skipped");
      continue;
    }
    scores.push_back({c.entity_id, c.prior,
                      ScoreLink(embedding, it->second, c.prior, c.count,
                                mention_score, params)});
  }
  Resolution r = ResolveScores(std::move(scores), params.nil_threshold);
  r.warnings = std::move(warnings);
  return r;
}

Json ResolutionToJson(const std::string &doc_id, const std::string &mention_id,
                      const Resolution &resolution) {
  Json j = {{"doc_id", doc_id},
            {"mention_id", mention_id},
            {"entity_id", nullptr},
            {"score", resolution.score}};
  if (resolution.entity_id) j["entity_id"] = *resolution.entity_id;
  return j;
}

double LinkerLoss(const LinkerParams &params,
                  const std::vector<LinkExample> &examples,
                  LinkerGradient *grad) {
  if (examples.empty()) throw Invalid("no linker examples");
  const double n = static_cast<double>(examples.size());
  if (grad != nullptr) {
    grad->q = Eigen::MatrixXd::Zero(params.q.rows(), params.q.cols());
    grad->w1 = Eigen::MatrixXd::Zero(kLinkHidden, kLinkFeatures);
    grad->b1 = Eigen::VectorXd::Zero(kLinkHidden);
    grad->w2 = Eigen::VectorXd::Zero(kLinkHidden);
    grad->b2 = 0.0;
  }
  double loss = 0.0;
  for (const LinkExample &ex : examples) {
    LinkFeatures f = ex.features;
    bool raw = !ex.mention.empty() && !ex.entity.empty();
    if (raw) {
      f.similarity = (params.q * AsEigen(ex.mention)).dot(AsEigen(ex.entity));
    }
    Eigen::Vector4d x = f.AsVector();
    Eigen::VectorXd pre = params.w1 * x + params.b1;
    Eigen::VectorXd act = pre.cwiseMax(0.0);
    double z = params.w2.dot(act) + params.b2;
    double y = ex.label ? 1.0 : 0.0;
    loss += ex.weight * (Softplus(z) - y * z);
    if (grad == nullptr) continue;
    double g = ex.weight * (Sigmoid(z) - y) / n;
    grad->w2 += g * act;
    grad->b2 += g;
    Eigen::VectorXd dpre =
        (g * params.w2).cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
    grad->w1 += dpre * x.transpose();
    grad->b1 += dpre;
    if (raw) {
      // d f1 / d Q = e m^T
      double dsim = params.w1.col(0).dot(dpre);
      grad->q += dsim * AsEigen(ex.entity) * AsEigen(ex.mention).transpose();
    }
  }
  return loss / n;
}

LinkerTrainResult TrainLinker(const std::vector<LinkExample> &examples,
                              int dim, const LinkerHyper &hyper) {
  bool has_pos = false, has_neg = false;
  for (const LinkExample &ex : examples) (ex.label ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg) {
    throw Invalid("linker training needs both positive and negative examples");
  }
  for (const LinkExample &ex : examples) {
    if ((!ex.mention.empty() && static_cast<int>(ex.mention.size()) != dim) ||
        (!ex.entity.empty() && static_cast<int>(ex.entity.size()) != dim)) {
      throw Invalid("linker example embedding dim mismatch");
    }
    if (!(ex.weight >= 0.0)) throw Invalid("example weights must be >= 0");
  }
  LinkerTrainResult result;
  result.params = LinkerParams::Zero(dim);
  result.params.nil_threshold = hyper.nil_threshold;
  Rng rng(hyper.seed);
  for (Eigen::Index r = 0; r < kLinkHidden; ++r) {
    for (Eigen::Index c = 0; c < kLinkFeatures; ++c) {
      result.params.w1(r, c) = rng.Uniform(-0.5, 0.5);
    }
    result.params.w2(r) = rng.Uniform(-0.5, 0.5);
    result.params.b1(r) = 0.1;
  }
  LinkerGradient grad;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    double loss = LinkerLoss(result.params, examples, &grad);
    result.losses.push_back(loss);
    result.params.w1 -= hyper.lr * grad.w1;
    result.params.b1 -= hyper.lr * grad.b1;
    result.params.w2 -= hyper.lr * grad.w2;
    result.params.b2 -= hyper.lr * grad.b2;
    if (hyper.train_q) result.params.q -= hyper.lr * grad.q;
  }
  result.final_loss = LinkerLoss(result.params, examples, nullptr);
  result.initial_loss =
      result.losses.empty() ? result.final_loss : result.losses.front();
  return result;
}

}  // namespace entex
