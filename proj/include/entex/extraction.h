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

// Per-token scoring heads over a shared encoding, block decoding of
// positive runs into mention spans, and full-batch head training.

#ifndef ENTEX_EXTRACTION_H_
#define ENTEX_EXTRACTION_H_

#include <Eigen/Dense>

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "entex/document.h"
#include "entex/encoder.h"

namespace entex {

constexpr int kDefaultHidden = 128;

// p = sigmoid(w2 . relu(W1 v + b1) + b2) for every token vector v.
struct HeadParams {
  std::string entity_type;
  Eigen::MatrixXd w1;  // hidden x dim
  Eigen::VectorXd b1;  // hidden
  Eigen::VectorXd w2;  // hidden
  double b2 = 0.0;
  std::optional<double> threshold;  // overrides DecodeConfig::threshold
  EncoderSpec encoder_spec;

  int dim() const { return static_cast<int>(w1.cols()); }
  int hidden() const { return static_cast<int>(w1.rows()); }

  static HeadParams Zero(std::string entity_type, int dim,
                         int hidden = kDefaultHidden);

  // Throws Error(kInvalidArgument) on inconsistent dims or non-finite
  // values.
  void Validate() const;

  Json ToJson() const;
  static HeadParams FromJson(const Json &j);
};

std::vector<HeadParams> LoadHeads(const std::string &path);
void SaveHeads(const std::string &path, const std::vector<HeadParams> &heads);

double Sigmoid(double z);

// Per-token probabilities, aligned with encoding.tokens.
std::vector<double> ScoreTokens(const TokenEncoding &encoding,
                                const HeadParams &head);

struct DecodeConfig {
  double threshold = 0.5;
  int min_tokens = 1;
  int max_tokens = 16;

  void Validate() const;
};

// Inclusive token index range.
struct TokenRun {
  int first = 0;
  int last = 0;

  bool operator==(const TokenRun &) const = default;
};

// Maximal runs of consecutive tokens with p > threshold, keeping runs whose
// length lies in [min_tokens, max_tokens].
std::vector<TokenRun> DecodeRuns(std::span<const double> scores,
                                 const DecodeConfig &cfg);

// DecodeRuns mapped onto character spans. Throws when the lengths differ.
std::vector<Span> DecodeSpans(std::span<const double> scores,
                              std::span<const Token> tokens,
                              const DecodeConfig &cfg);

struct ExtractedMention {
  std::string entity_type;
  Mention mention;     // carries the pooled embedding
  double score = 0.0;  // mean token probability over the run
};

// entity_type -> mentions in field and position order.
using ExtractionResult = std::map<std::string, std::vector<ExtractedMention>>;

// Encodes `doc` once and applies every head to that encoding.
ExtractionResult MultiTaskExtract(const Document &doc,
                                  std::span<const HeadParams> heads,
                                  const DecodeConfig &cfg,
                                  const Encoder &encoder);

// Applies one head to an existing encoding.
std::vector<ExtractedMention> ExtractWithHead(const Document &doc,
                                              const DocumentEncoding &encoding,
                                              const HeadParams &head,
                                              const DecodeConfig &cfg);

// {doc_id, mention_id, entity_type, field, start, end, surface, score} plus
// the pooled embedding when requested.
Json ExtractedMentionToJson(const ExtractedMention &m,
                            bool with_embedding = false);
ExtractedMention ExtractedMentionFromJson(const Json &j);

// ---- Training ----

// Per-token binary labels for one entity type, keyed by field name.
struct LabeledDocument {
  Document doc;
  std::map<std::string, std::vector<int>> token_labels;
};

// Marks tokens that overlap any gold span of that field.
std::map<std::string, std::vector<int>> TokenLabelsFromSpans(
    const Document &doc, const std::vector<Span> &gold);

// Stacked token vectors and labels.
struct TokenDataset {
  RowMatrix x;
  Eigen::VectorXd y;
};

// Throws when a label vector does not match its field's tokenization.
TokenDataset BuildTokenDataset(const std::vector<LabeledDocument> &corpus,
                               const Encoder &encoder);

struct HeadGradient {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::VectorXd w2;
  double b2 = 0.0;
};

// Mean binary cross-entropy over all tokens. Fills `grad` when non-null.
double HeadLoss(const HeadParams &head, const TokenDataset &data,
                HeadGradient *grad);

struct HeadHyper {
  double lr = 0.5;
  int epochs = 300;
  uint64_t seed = 17;
  int hidden = kDefaultHidden;
};

struct HeadTrainResult {
  HeadParams head;
  double initial_loss = 0.0;
  double final_loss = 0.0;  // loss at the returned parameters
  std::vector<double> losses;  // loss before each step
};

// Weights drawn from seeded uniform[-0.05, 0.05]; biases start at zero.
HeadParams InitHead(std::string entity_type, int dim, const HeadHyper &hyper);

HeadTrainResult TrainHeadOnDataset(std::string entity_type,
                                   const TokenDataset &data,
                                   const EncoderSpec &spec,
                                   const HeadHyper &hyper);

HeadTrainResult TrainHead(std::string entity_type,
                          const std::vector<LabeledDocument> &corpus,
                          const Encoder &encoder, const HeadHyper &hyper);

}  // namespace entex

#endif  // ENTEX_EXTRACTION_H_
