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

#include "entex/extraction.h"

#include <cmath>
#include <fstream>

#include "entex/error.h"
#include "entex/random.h"
#include "entex/text.h"

namespace entex {

namespace {

Error Invalid(const std::string &message) {
  return Error(ErrorCode::kInvalidArgument, message);
}

Json MatrixToJson(const Eigen::MatrixXd &m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd MatrixFromJson(const Json &j, Eigen::Index rows,
                               Eigen::Index cols) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    throw Invalid("matrix row count mismatch");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Json &row = j[r];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw Invalid("matrix column count mismatch");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[c].get<double>();
  }
  return m;
}

Json VectorToJson(const Eigen::VectorXd &v) {
  return Json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::VectorXd VectorFromJson(const Json &j, Eigen::Index size) {
  auto values = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(values.size()) != size) {
    throw Invalid("vector length mismatch");
  }
  return Eigen::Map<Eigen::VectorXd>(values.data(), size);
}

// Stable log(1 + exp(z)).
double Softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

}  // namespace

double Sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

HeadParams HeadParams::Zero(std::string entity_type, int dim, int hidden) {
  HeadParams head;
  head.entity_type = std::move(entity_type);
  head.w1 = Eigen::MatrixXd::Zero(hidden, dim);
  head.b1 = Eigen::VectorXd::Zero(hidden);
  head.w2 = Eigen::VectorXd::Zero(hidden);
  head.encoder_spec.dim = dim;
  return head;
}

void HeadParams::Validate() const {
  if (entity_type.empty()) throw Invalid("head entity_type is empty");
  if (w1.rows() == 0 || w1.cols() == 0) throw Invalid("head W1 is empty");
  if (b1.size() != w1.rows() || w2.size() != w1.rows()) {
    throw Invalid("head " + entity_type + ": hidden dims inconsistent");
  }
  if (!w1.allFinite() || !b1.allFinite() || !w2.allFinite() ||
      !std::isfinite(b2)) {
    throw Invalid("head " + entity_type + " has non-finite parameters");
  }
  if (threshold && (*threshold <= 0.0 || *threshold >= 1.0)) {
    throw Invalid("head threshold must lie in (0,1)");
  }
}

Json HeadParams::ToJson() const {
  Json j = {{"entity_type", entity_type},
            {"dims", {{"dim", dim()}, {"hidden", hidden()}}},
            {"W1", MatrixToJson(w1)},
            {"b1", VectorToJson(b1)},
            {"w2", VectorToJson(w2)},
            {"b2", b2},
            {"encoder_spec", encoder_spec.ToJson()}};
  if (threshold) j["threshold"] = *threshold;
  return j;
}

HeadParams HeadParams::FromJson(const Json &j) {
  HeadParams head;
  try {
    head.entity_type = j.at("entity_type").get<std::string>();
    int dim = j.at("dims").at("dim").get<int>();
    int hidden = j.at("dims").at("hidden").get<int>();
    head.w1 = MatrixFromJson(j.at("W1"), hidden, dim);
    head.b1 = VectorFromJson(j.at("b1"), hidden);
    head.w2 = VectorFromJson(j.at("w2"), hidden);
    head.b2 = j.at("b2").get<double>();
    if (j.contains("threshold")) head.threshold = j["threshold"].get<double>();
    if (j.contains("encoder_spec")) {
      head.encoder_spec = EncoderSpec::FromJson(j["encoder_spec"]);
    }
  } catch (const Json::exception &e) {
    throw Invalid(std::string("bad head params: ") + e.what());
  }
  if (head.encoder_spec.dim != head.dim()) {
    throw Invalid("head " + head.entity_type +
                  ": encoder_spec dim differs from W1");
  }
  head.Validate();
  return head;
}

std::vector<HeadParams> LoadHeads(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::parse_error &e) {
    throw Error(ErrorCode::kParse, path + ": " + e.what());
  }
  const Json &list = j.is_object() && j.contains("heads") ? j["heads"] : j;
  std::vector<HeadParams> heads;
  if (list.is_array()) {
    for (const Json &h : list) heads.push_back(HeadParams::FromJson(h));
  } else {
    heads.push_back(HeadParams::FromJson(list));
  }
  if (heads.empty()) throw Invalid(path + ": no heads");
  return heads;
}

void SaveHeads(const std::string &path, const std::vector<HeadParams> &heads) {
  Json list = Json::array();
  for (const HeadParams &h : heads) list.push_back(h.ToJson());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << Json{{"heads", list}}.dump() << '\n';
}

std::vector<double> ScoreTokens(const TokenEncoding &encoding,
                                const HeadParams &head) {
  if (encoding.vectors.cols() != head.dim()) {
    throw Invalid("encoding dim " + std::to_string(encoding.vectors.cols()) +
                  " does not match head dim " + std::to_string(head.dim()));
  }
  const Eigen::Index rows = encoding.vectors.rows();
  const Eigen::Index dim = encoding.vectors.cols();
  std::vector<double> scores(static_cast<size_t>(rows));
  Eigen::VectorXd hidden(head.hidden());
  // Reference token vectors are sparse (one coordinate per n-gram), so the
  // first layer only touches the W1 columns of non-zero coordinates.
  for (Eigen::Index r = 0; r < rows; ++r) {
    hidden = head.b1;
    for (Eigen::Index c = 0; c < dim; ++c) {
      double v = encoding.vectors(r, c);
      if (v != 0.0) hidden.noalias() += v * head.w1.col(c);
    }
    double z = head.b2 + head.w2.dot(hidden.cwiseMax(0.0));
    scores[static_cast<size_t>(r)] = Sigmoid(z);
  }
  return scores;
}

void DecodeConfig::Validate() const {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Invalid("decode threshold must lie in (0,1)");
  }
  if (min_tokens < 1 || max_tokens < 1 || min_tokens > max_tokens) {
    throw Invalid("decode token bounds must satisfy 1 <= min <= max");
  }
}

std::vector<TokenRun> DecodeRuns(std::span<const double> scores,
                                 const DecodeConfig &cfg) {
  std::vector<TokenRun> runs;
  const int n = static_cast<int>(scores.size());
  int i = 0;
  while (i < n) {
    if (!(scores[i] > cfg.threshold)) {
      ++i;
      continue;
    }
    int j = i;
    while (j + 1 < n && scores[j + 1] > cfg.threshold) ++j;
    int length = j - i + 1;
    if (length >= cfg.min_tokens && length <= cfg.max_tokens) {
      runs.push_back({i, j});
    }
    i = j + 1;
  }
  return runs;
}

std::vector<Span> DecodeSpans(std::span<const double> scores,
                              std::span<const Token> tokens,
                              const DecodeConfig &cfg) {
  if (scores.size() != tokens.size()) {
    throw Invalid("score and token counts differ");
  }
  std::vector<Span> spans;
  for (const TokenRun &run : DecodeRuns(scores, cfg)) {
    spans.push_back(
        {tokens[run.first].field, tokens[run.first].start, tokens[run.last].end});
  }
  return spans;
}

std::vector<ExtractedMention> ExtractWithHead(const Document &doc,
                                              const DocumentEncoding &encoding,
                                              const HeadParams &head,
                                              const DecodeConfig &cfg) {
  DecodeConfig head_cfg = cfg;
  if (head.threshold) head_cfg.threshold = *head.threshold;
  std::vector<ExtractedMention> out;
  for (size_t f = 0; f < encoding.size(); ++f) {
    const TokenEncoding &enc = encoding[f];
    if (enc.tokens.empty()) continue;
    std::vector<double> scores = ScoreTokens(enc, head);
    for (const TokenRun &run : DecodeRuns(scores, head_cfg)) {
      ExtractedMention em;
      em.entity_type = head.entity_type;
      em.mention.doc_id = doc.id;
      em.mention.span = {enc.field, enc.tokens[run.first].start,
                         enc.tokens[run.last].end};
      em.mention.surface = SubstrCodepoints(doc.fields[f].text,
                                            em.mention.span.start,
                                            em.mention.span.end);
      em.mention.embedding = Pool(enc, em.mention.span);
      double sum = 0.0;
      for (int t = run.first; t <= run.last; ++t) sum += scores[t];
      em.score = sum / (run.last - run.first + 1);
      out.push_back(std::move(em));
    }
  }
  return out;
}

ExtractionResult MultiTaskExtract(const Document &doc,
                                  std::span<const HeadParams> heads,
                                  const DecodeConfig &cfg,
                                  const Encoder &encoder) {
  if (heads.empty()) throw Invalid("multi-task extraction needs >= 1 head");
  cfg.Validate();
  for (const HeadParams &head : heads) {
    if (head.dim() != encoder.dim()) {
      throw Invalid("head " + head.entity_type +
                    " dim does not match the encoder");
    }
  }
  DocumentEncoding encoding = encoder.Encode(doc);
  ExtractionResult result;
  for (const HeadParams &head : heads) {
    auto mentions = ExtractWithHead(doc, encoding, head, cfg);
    auto &slot = result[head.entity_type];
    slot.insert(slot.end(), std::make_move_iterator(mentions.begin()),
                std::make_move_iterator(mentions.end()));
  }
  return result;
}

Json ExtractedMentionToJson(const ExtractedMention &m, bool with_embedding) {
  Json j = {{"doc_id", m.mention.doc_id},
            {"mention_id", m.mention.Id()},
            {"entity_type", m.entity_type},
            {"field", m.mention.span.field},
            {"start", m.mention.span.start},
            {"end", m.mention.span.end},
            {"surface", m.mention.surface},
            {"score", m.score}};
  if (with_embedding) j["embedding"] = m.mention.embedding;
  return j;
}

ExtractedMention ExtractedMentionFromJson(const Json &j) {
  ExtractedMention m;
  m.mention = MentionFromJson(j);
  try {
    m.entity_type = j.value("entity_type", "");
    m.score = j.value("score", 0.0);
  } catch (const Json::exception &e) {
    throw Invalid(std::string("bad extracted mention: ") + e.what());
  }
  return m;
}

std::map<std::string, std::vector<int>> TokenLabelsFromSpans(
    const Document &doc, const std::vector<Span> &gold) {
  std::map<std::string, std::vector<int>> labels;
  for (const Field &field : doc.fields) {
    std::vector<Token> tokens = Tokenize(field.text, field.name);
    std::vector<int> &row = labels[field.name];
    row.assign(tokens.size(), 0);
    for (const Span &span : gold) {
      if (span.field != field.name) continue;
      for (size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i].start < span.end && span.start < tokens[i].end) {
          row[i] = 1;
        }
      }
    }
  }
  return labels;
}

TokenDataset BuildTokenDataset(const std::vector<LabeledDocument> &corpus,
                               const Encoder &encoder) {
  if (corpus.empty()) throw Invalid("training corpus is empty");
  std::vector<const RowMatrix *> blocks;
  std::vector<DocumentEncoding> encodings;
  encodings.reserve(corpus.size());
  std::vector<double> labels;
  for (const LabeledDocument &ld : corpus) {
    encodings.push_back(encoder.Encode(ld.doc));
    for (const TokenEncoding &enc : encodings.back()) {
      auto it = ld.token_labels.find(enc.field);
      if (it == ld.token_labels.end()) {
        if (enc.tokens.empty()) continue;
        throw Invalid("document " + ld.doc.id + ": no labels for field " +
                      enc.field);
      }
      if (it->second.size() != enc.tokens.size()) {
        throw Invalid("document " + ld.doc.id + " field " + enc.field + ": " +
                      std::to_string(it->second.size()) + " labels for " +
                      std::to_string(enc.tokens.size()) + " tokens");
      }
      for (int label : it->second) {
        if (label != 0 && label != 1) throw Invalid("token labels must be 0/1");
        labels.push_back(label);
      }
      blocks.push_back(&enc.vectors);
    }
  }
  if (labels.empty()) throw Invalid("training corpus has no tokens");
  TokenDataset data;
  data.x.resize(static_cast<Eigen::Index>(labels.size()), encoder.dim());
  Eigen::Index row = 0;
  for (const RowMatrix *block : blocks) {
    data.x.middleRows(row, block->rows()) = *block;
    row += block->rows();
  }
  data.y = Eigen::Map<Eigen::VectorXd>(labels.data(),
                                       static_cast<Eigen::Index>(labels.size()));
  return data;
}

double HeadLoss(const HeadParams &head, const TokenDataset &data,
                HeadGradient *grad) {
  const Eigen::Index n = data.x.rows();
  if (n == 0) throw Invalid("empty dataset");
  if (data.x.cols() != head.dim()) throw Invalid("dataset dim mismatch");
  Eigen::MatrixXd pre = data.x * head.w1.transpose();
  pre.rowwise() += head.b1.transpose();
  Eigen::MatrixXd act = pre.cwiseMax(0.0);
  Eigen::VectorXd logits = (act * head.w2).array() + head.b2;

  double loss = 0.0;
  Eigen::VectorXd dlogits(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double z = logits(i), y = data.y(i);
    loss += Softplus(z) - y * z;
    dlogits(i) = (Sigmoid(z) - y) / static_cast<double>(n);
  }
  loss /= static_cast<double>(n);
  if (grad == nullptr) return loss;

  grad->w2 = act.transpose() * dlogits;
  grad->b2 = dlogits.sum();
  Eigen::MatrixXd dpre = dlogits * head.w2.transpose();
  dpre = dpre.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
  grad->w1 = dpre.transpose() * data.x;
  grad->b1 = dpre.colwise().sum().transpose();
  return loss;
}

HeadParams InitHead(std::string entity_type, int dim, const HeadHyper &hyper) {
  HeadParams head = HeadParams::Zero(std::move(entity_type), dim, hyper.hidden);
  Rng rng(hyper.seed);
  for (Eigen::Index r = 0; r < head.w1.rows(); ++r) {
    for (Eigen::Index c = 0; c < head.w1.cols(); ++c) {
      head.w1(r, c) = rng.Uniform(-0.05, 0.05);
    }
  }
  for (Eigen::Index r = 0; r < head.w2.size(); ++r) {
    head.w2(r) = rng.Uniform(-0.05, 0.05);
  }
  return head;
}

HeadTrainResult TrainHeadOnDataset(std::string entity_type,
                                   const TokenDataset &data,
                                   const EncoderSpec &spec,
                                   const HeadHyper &hyper) {
  if (data.x.rows() == 0) throw Invalid("training corpus is empty");
  if (hyper.epochs < 0 || !(hyper.lr > 0.0) || hyper.hidden < 1) {
    throw Invalid("bad training hyper-parameters");
  }
  HeadTrainResult result;
  result.head = InitHead(std::move(entity_type),
                         static_cast<int>(data.x.cols()), hyper);
  result.head.encoder_spec = spec;
  HeadGradient grad;
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    double loss = HeadLoss(result.head, data, &grad);
    result.losses.push_back(loss);
    result.head.w1 -= hyper.lr * grad.w1;
    result.head.b1 -= hyper.lr * grad.b1;
    result.head.w2 -= hyper.lr * grad.w2;
    result.head.b2 -= hyper.lr * grad.b2;
  }
  result.final_loss = HeadLoss(result.head, data, nullptr);
  result.initial_loss =
      result.losses.empty() ? result.final_loss : result.losses.front();
  return result;
}

HeadTrainResult TrainHead(std::string entity_type,
                          const std::vector<LabeledDocument> &corpus,
                          const Encoder &encoder, const HeadHyper &hyper) {
  TokenDataset data = BuildTokenDataset(corpus, encoder);
  return TrainHeadOnDataset(std::move(entity_type), data, encoder.spec(),
                            hyper);
}

}  // namespace entex
