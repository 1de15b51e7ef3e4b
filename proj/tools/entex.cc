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

// entex: batch pipeline and labeling service.

#include <CLI11.hpp>

#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>

#include "entex/clustering.h"
#include "entex/error.h"
#include "entex/evaluation.h"
#include "entex/extraction.h"
#include "entex/kb_dictionary.h"
#include "entex/labeling.h"
#include "entex/linking.h"
#include "entex/matcher.h"
#include "entex/pipeline.h"
#include "entex/random.h"
#include "entex/service.h"
#include "entex/synth.h"

namespace entex {
namespace {

using Clock = std::chrono::steady_clock;

// Collected per run and printed to stderr as one JSON object.
struct Summary {
  std::string command;
  Json counts = Json::object();
  Json timings_ms = Json::object();
  std::vector<std::string> warnings;
  Clock::time_point start = Clock::now();
  Clock::time_point mark = Clock::now();

  void Lap(const std::string &name) {
    auto now = Clock::now();
    timings_ms[name] =
        std::chrono::duration<double, std::milli>(now - mark).count();
    mark = now;
  }

  void Print(int exit_code, const std::string &error = "") const {
    Json j = {{"command", command},
              {"exit_code", exit_code},
              {"counts", counts},
              {"timings_ms", timings_ms},
              {"total_ms", std::chrono::duration<double, std::milli>(
                               Clock::now() - start)
                               .count()},
              {"warnings", warnings}};
    if (!error.empty()) j["error"] = error;
    std::cerr << j.dump() << std::endl;
  }
};

Summary g_summary;

void AddWarnings(const std::vector<std::string> &w) {
  g_summary.warnings.insert(g_summary.warnings.end(), w.begin(), w.end());
}

std::vector<Json> ReadRows(const std::string &path) {
  return ReadJsonLines(path);
}

std::map<std::string, const Document *> IndexDocs(
    const std::vector<Document> &docs) {
  std::map<std::string, const Document *> out;
  for (const Document &d : docs) out[d.id] = &d;
  return out;
}

void WriteText(const std::string &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << text;
}

std::vector<SynthMention> LoadGold(const std::string &path) {
  std::vector<SynthMention> out;
  for (const Json &j : ReadRows(path)) out.push_back(SynthMention::FromJson(j));
  return out;
}

const TokenEncoding &FieldEncoding(const DocumentEncoding &enc,
                                   const std::string &field) {
  for (const TokenEncoding &e : enc) {
    if (e.field == field) return e;
  }
  throw Error(ErrorCode::kInvalidArgument, "no field " + field);
}

// ---- synth ----

struct SynthArgs {
  std::string out_dir;
  int docs = 500;
  int entities = 80;
  uint64_t seed = 7;
  double golden_fraction = 0.1;
};

int RunSynth(const SynthArgs &a) {
  SynthConfig cfg{a.docs, a.entities, a.seed};
  SynthCorpus corpus = GenerateCorpus(cfg);
  std::filesystem::create_directories(a.out_dir);
  auto path = [&](const char *name) {
    return (std::filesystem::path(a.out_dir) / name).string();
  };
  std::ofstream docs(path("docs.jsonl"));
  WriteDocuments(docs, corpus.docs);
  docs.close();
  std::vector<Json> gold, dump, texts, tasks;
  for (const SynthMention &m : corpus.gold) gold.push_back(m.ToJson());
  for (const DumpRecord &r : corpus.dump) dump.push_back(DumpRecordToJson(r));
  for (const SynthEntity &e : corpus.entities) {
    texts.push_back({{"entity_id", e.id},
                     {"title", e.title},
                     {"entity_type", e.type},
                     {"text", e.description}});
  }
  std::map<std::string, std::vector<Span>> by_doc;
  for (const SynthMention &m : corpus.gold) by_doc[m.doc_id].push_back(m.span);
  Rng rng(a.seed ^ 0x5eed);
  for (const Document &d : corpus.docs) {
    TaskRecord t;
    t.task_id = "ow-" + d.id;
    t.kind = TaskKind::kOpenWorld;
    t.doc = d;
    t.is_golden = rng.Bernoulli(a.golden_fraction);
    if (t.is_golden) t.expert_spans = by_doc[d.id];
    tasks.push_back(t.ToJson());
  }
  WriteJsonLines(path("gold.jsonl"), gold);
  WriteJsonLines(path("dump.jsonl"), dump);
  WriteJsonLines(path("entity_texts.jsonl"), texts);
  WriteJsonLines(path("tasks.jsonl"), tasks);
  g_summary.counts = {{"docs", corpus.docs.size()},
                      {"gold_mentions", gold.size()},
                      {"dump_records", dump.size()},
                      {"entities", texts.size()},
                      {"tasks", tasks.size()}};
  return 0;
}

// ---- build-dict ----

struct BuildDictArgs {
  std::string dump;
  std::string out;
  int max_alias_length = 64;
  bool keep_numeric = false;
  int max_depth = 16;
  std::string report;
};

int RunBuildDict(const BuildDictArgs &a) {
  std::vector<DumpRecord> records = LoadDumpRecords(a.dump);
  g_summary.Lap("load");
  BuildOptions opts;
  opts.cleanup.max_alias_length = a.max_alias_length;
  opts.cleanup.drop_numeric_punct = !a.keep_numeric;
  opts.max_redirect_depth = a.max_depth;
  BuildResult result = BuildAliasTable(records, opts);
  g_summary.Lap("build");
  SaveTable(a.out, result.table);
  AddWarnings(result.warnings);
  g_summary.counts = result.stats.ToJson();
  if (!a.report.empty()) {
    Json cycles = Json::array();
    for (const auto &c : result.redirects.cycles) cycles.push_back(c);
    Json report = {{"stats", result.stats.ToJson()},
                   {"cycles", cycles},
                   {"dangling", result.redirects.dangling},
                   {"warnings", result.warnings}};
    WriteText(a.report, report.dump(2) + "\n");
  }
  return 0;
}

// ---- train-head ----

struct TrainHeadArgs {
  std::string docs;
  std::string gold;
  std::vector<std::string> types;
  std::string out;
  int dim = 64;
  int ngram = 3;
  int epochs = 300;
  double lr = 8.0;
  int hidden = kDefaultHidden;
  uint64_t seed = 17;
};

int RunTrainHead(const TrainHeadArgs &a) {
  std::vector<Document> docs = LoadDocuments(a.docs);
  std::vector<SynthMention> gold = LoadGold(a.gold);
  std::vector<std::string> types = a.types;
  if (types.empty()) {
    std::set<std::string> seen;
    for (const SynthMention &m : gold) seen.insert(m.entity_type);
    types.assign(seen.begin(), seen.end());
  }
  EncoderSpec spec;
  spec.dim = a.dim;
  spec.ngram_n = a.ngram;
  Encoder encoder(spec);
  HeadHyper hyper;
  hyper.epochs = a.epochs;
  hyper.lr = a.lr;
  hyper.hidden = a.hidden;
  hyper.seed = a.seed;
  // Heads are independent; train them concurrently.
  std::vector<std::future<HeadTrainResult>> jobs;
  for (const std::string &type : types) {
    jobs.push_back(std::async(std::launch::async, [&, type] {
      std::map<std::string, std::vector<Span>> spans;
      for (const SynthMention &m : gold) {
        if (m.entity_type == type) spans[m.doc_id].push_back(m.span);
      }
      std::vector<LabeledDocument> corpus;
      for (const Document &d : docs) {
        corpus.push_back({d, TokenLabelsFromSpans(d, spans[d.id])});
      }
      return TrainHead(type, corpus, encoder, hyper);
    }));
  }
  std::vector<HeadParams> heads;
  Json losses = Json::object();
  for (size_t i = 0; i < jobs.size(); ++i) {
    HeadTrainResult r = jobs[i].get();
    losses[types[i]] = {{"initial", r.initial_loss}, {"final", r.final_loss}};
    heads.push_back(std::move(r.head));
  }
  g_summary.Lap("train");
  SaveHeads(a.out, heads);
  g_summary.counts = {{"heads", heads.size()}, {"docs", docs.size()},
                      {"losses", losses}};
  return 0;
}

// ---- extract ----

struct ExtractArgs {
  std::string docs;
  std::string heads;
  std::string out;
  double threshold = 0.5;
  int min_tokens = 1;
  int max_tokens = 16;
  bool no_embeddings = false;
};

int RunExtract(const ExtractArgs &a) {
  std::vector<Document> docs = LoadDocuments(a.docs);
  std::vector<HeadParams> heads = LoadHeads(a.heads);
  g_summary.Lap("load");
  if (heads.empty()) throw Error(ErrorCode::kInvalidArgument, "no heads");
  for (const HeadParams &h : heads) {
    if (!(h.encoder_spec == heads.front().encoder_spec)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "heads were trained with different encoders");
    }
  }
  DecodeConfig cfg{a.threshold, a.min_tokens, a.max_tokens};
  cfg.Validate();
  Encoder encoder(heads.front().encoder_spec);
  std::vector<ExtractedMention> mentions =
      ExtractCorpus(docs, heads, cfg, encoder);
  g_summary.Lap("extract");
  std::vector<Json> rows;
  for (const ExtractedMention &m : mentions) {
    rows.push_back(ExtractedMentionToJson(m, !a.no_embeddings));
  }
  WriteJsonLines(a.out, rows);
  g_summary.counts = {{"docs", docs.size()},
                      {"heads", heads.size()},
                      {"mentions", rows.size()},
                      {"encoder_invocations", encoder.invocations()}};
  return 0;
}

// ---- train-siamese ----

struct TrainSiameseArgs {
  std::string docs;
  std::string gold;
  std::string out;
  int dim = 64;
  int pairs = 4000;
  int epochs = 200;
  double lr = 0.05;
  uint64_t seed = 23;
};

int RunTrainSiamese(const TrainSiameseArgs &a) {
  std::vector<Document> docs = LoadDocuments(a.docs);
  auto index = IndexDocs(docs);
  std::vector<SynthMention> gold = LoadGold(a.gold);
  EncoderSpec spec;
  spec.dim = a.dim;
  Encoder encoder(spec);
  std::map<std::string, DocumentEncoding> encodings;
  std::vector<Vector> vecs;
  std::vector<std::string> ents;
  for (const SynthMention &m : gold) {
    auto it = index.find(m.doc_id);
    if (it == index.end()) continue;
    auto [eit, inserted] = encodings.try_emplace(m.doc_id);
    if (inserted) eit->second = encoder.Encode(*it->second);
    vecs.push_back(Pool(FieldEncoding(eit->second, m.span.field), m.span));
    ents.push_back(m.entity_id);
  }
  std::map<std::string, std::vector<int>> by_entity;
  for (size_t i = 0; i < ents.size(); ++i) by_entity[ents[i]].push_back(i);
  std::vector<std::string> multi;
  for (const auto &[e, idx] : by_entity) {
    if (idx.size() > 1) multi.push_back(e);
  }
  if (multi.empty() || by_entity.size() < 2) {
    throw Error(ErrorCode::kFailedPrecondition,
                "siamese training needs repeated and distinct entities");
  }
  Rng rng(a.seed);
  std::vector<MentionPair> pairs;
  for (int i = 0; i < a.pairs; ++i) {
    if (i % 2 == 0) {
      const auto &idx = by_entity[multi[rng.Below(multi.size())]];
      int x = idx[rng.Below(idx.size())], y = idx[rng.Below(idx.size())];
      if (x == y) continue;
      pairs.push_back({vecs[x], vecs[y], true});
    } else {
      int x = rng.Below(vecs.size()), y = rng.Below(vecs.size());
      if (ents[x] == ents[y]) continue;
      pairs.push_back({vecs[x], vecs[y], false});
    }
  }
  SiameseHyper hyper;
  hyper.epochs = a.epochs;
  hyper.lr = a.lr;
  hyper.seed = a.seed;
  SiameseTrainResult r = TrainSiamese(pairs, hyper);
  AddWarnings(r.warnings);
  SaveSiamese(a.out, r.params);
  g_summary.counts = {{"pairs", pairs.size()},
                      {"initial_loss", r.initial_loss},
                      {"final_loss", r.final_loss}};
  return 0;
}

// ---- cluster ----

struct ClusterArgs {
  std::string mentions;
  std::string siamese;
  std::string out;
  std::string edges;
  double threshold = 0.8;
  std::string blocking = "surface";
  double resolution = 1.0;
  uint64_t seed = 0;
};

int RunCluster(const ClusterArgs &a) {
  std::map<std::string, std::vector<Mention>> groups;
  for (const Json &j : ReadRows(a.mentions)) {
    Mention m = MentionFromJson(j);
    if (m.embedding.empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "mention " + m.Id() + " has no embedding");
    }
    groups[j.value("entity_type", "")].push_back(std::move(m));
  }
  SiameseParams params = LoadSiamese(a.siamese);
  Blocking blocking;
  if (a.blocking == "surface") {
    blocking = Blocking::kNormalizedSurface;
  } else if (a.blocking == "none") {
    blocking = Blocking::kNone;
  } else {
    throw Error(ErrorCode::kInvalidArgument, "blocking must be surface|none");
  }
  g_summary.Lap("load");
  LouvainOptions opts;
  opts.resolution = a.resolution;
  opts.seed = a.seed;
  std::vector<Json> entities, edges;
  int64_t mentions = 0;
  Json modularity = Json::object();
  for (const auto &[type, group] : groups) {
    ClusterOutput out =
        ClusterMentions(group, params, a.threshold, blocking, opts);
    mentions += group.size();
    modularity[type] = out.partition.modularity;
    for (const OpenEntity &e : out.entities) {
      Json j = OpenEntityToJson(e, group);
      j["entity_type"] = type;
      entities.push_back(j);
    }
    for (const GraphEdge &e : out.graph.edges) {
      Json j = EdgeToJson(out.graph, e);
      j["entity_type"] = type;
      edges.push_back(j);
    }
  }
  g_summary.Lap("cluster");
  WriteJsonLines(a.out, entities);
  if (!a.edges.empty()) WriteJsonLines(a.edges, edges);
  g_summary.counts = {{"mentions", mentions},
                      {"entities", entities.size()},
                      {"edges", edges.size()},
                      {"modularity", modularity}};
  return 0;
}

// ---- embed-entities ----

struct EmbedArgs {
  std::string texts;
  std::string out;
  int dim = 64;
  int ngram = 3;
};

int RunEmbed(const EmbedArgs &a) {
  std::map<std::string, std::string> texts;
  for (const Json &j : ReadRows(a.texts)) {
    texts[j.at("entity_id").get<std::string>()] = j.value("text", "");
  }
  EncoderSpec spec;
  spec.dim = a.dim;
  spec.ngram_n = a.ngram;
  Encoder encoder(spec);
  EmbedResult r = EmbedEntities(texts, encoder);
  AddWarnings(r.warnings);
  SaveEntityEmbeddings(a.out, r.embeddings);
  g_summary.counts = {{"entities", r.embeddings.size()}};
  return 0;
}

// ---- candidates ----

struct CandidatesArgs {
  std::string docs;
  std::string dict;
  std::string out;
  std::string tasks_out;
  bool all_overlaps = false;
};

int RunCandidates(const CandidatesArgs &a) {
  std::vector<Document> docs = LoadDocuments(a.docs);
  CompiledMatcher matcher = CompiledMatcher::Compile(LoadTable(a.dict));
  g_summary.Lap("load");
  OverlapPolicy policy =
      a.all_overlaps ? OverlapPolicy::kAll : OverlapPolicy::kLongestPerStart;
  std::vector<Json> rows, tasks;
  int64_t skippable = 0;
  for (const Document &d : docs) {
    std::vector<CandidateMention> found = matcher.FindCandidates(d, policy);
    for (const CandidateMention &m : found) {
      rows.push_back(CandidateMentionToJson(m));
    }
    if (!a.tasks_out.empty()) {
      TaskRecord t;
      t.task_id = "cw-" + d.id;
      t.kind = TaskKind::kClosedWorld;
      t.doc = d;
      t.mentions = found;
      skippable += found.empty();
      tasks.push_back(t.ToJson());
    }
  }
  g_summary.Lap("match");
  WriteJsonLines(a.out, rows);
  if (!a.tasks_out.empty()) WriteJsonLines(a.tasks_out, tasks);
  g_summary.counts = {{"docs", docs.size()},
                      {"candidate_mentions", rows.size()},
                      {"tasks", tasks.size()},
                      {"auto_skippable", skippable}};
  return 0;
}

// ---- train-linker ----

struct TrainLinkerArgs {
  std::string docs;
  std::string gold;
  std::string dict;
  std::string entities;
  std::string out;
  int epochs = 500;
  double lr = 0.5;
  double nil_threshold = 0.5;
  bool fixed_q = false;
  uint64_t seed = 29;
};

int RunTrainLinker(const TrainLinkerArgs &a) {
  std::vector<Document> docs = LoadDocuments(a.docs);
  std::vector<SynthMention> gold = LoadGold(a.gold);
  CompiledMatcher matcher = CompiledMatcher::Compile(LoadTable(a.dict));
  EntityEmbeddingStore store = LoadEntityEmbeddings(a.entities);
  if (store.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no entity embeddings");
  }
  int dim = static_cast<int>(store.begin()->second.vector.size());
  EncoderSpec spec;
  spec.dim = dim;
  Encoder encoder(spec);
  std::map<std::string, std::string> gold_entity;
  for (const SynthMention &m : gold) {
    gold_entity[MentionId(m.doc_id, m.span)] = m.entity_id;
  }
  std::vector<LinkExample> examples;
  int64_t matched = 0;
  for (const Document &d : docs) {
    std::vector<CandidateMention> cands = matcher.FindCandidates(d);
    if (cands.empty()) continue;
    DocumentEncoding enc = encoder.Encode(d);
    for (const CandidateMention &c : cands) {
      auto g = gold_entity.find(c.mention_id);
      if (g == gold_entity.end()) continue;
      ++matched;
      Vector mv = Pool(FieldEncoding(enc, c.span.field), c.span);
      for (const Candidate &cand : c.candidates) {
        auto e = store.find(cand.entity_id);
        if (e == store.end()) continue;
        LinkExample ex;
        ex.features.log_count = std::log1p(static_cast<double>(cand.count));
        ex.features.prior = cand.prior;
        ex.mention = mv;
        ex.entity = e->second.vector;
        ex.label = cand.entity_id == g->second;
        examples.push_back(std::move(ex));
      }
    }
  }
  g_summary.Lap("examples");
  LinkerHyper hyper;
  hyper.epochs = a.epochs;
  hyper.lr = a.lr;
  hyper.seed = a.seed;
  hyper.train_q = !a.fixed_q;
  hyper.nil_threshold = a.nil_threshold;
  LinkerTrainResult r = TrainLinker(examples, dim, hyper);
  g_summary.Lap("train");
  SaveLinker(a.out, r.params);
  g_summary.counts = {{"matched_mentions", matched},
                      {"examples", examples.size()},
                      {"initial_loss", r.initial_loss},
                      {"final_loss", r.final_loss}};
  return 0;
}

// ---- link ----

struct LinkArgs {
  std::string docs;
  std::string dict;
  std::string entities;
  std::string linker;
  std::string out;
  double nil_threshold = -1.0;
};

int RunLink(const LinkArgs &a) {
  std::vector<Document> docs = LoadDocuments(a.docs);
  CompiledMatcher matcher = CompiledMatcher::Compile(LoadTable(a.dict));
  EntityEmbeddingStore store = LoadEntityEmbeddings(a.entities);
  LinkerParams params = LoadLinker(a.linker);
  if (a.nil_threshold >= 0.0) params.nil_threshold = a.nil_threshold;
  params.Validate();
  EncoderSpec spec;
  spec.dim = params.dim();
  Encoder encoder(spec);
  g_summary.Lap("load");
  std::vector<LinkedMention> links =
      LinkCorpus(docs, matcher, encoder, store, params);
  g_summary.Lap("link");
  std::vector<Json> rows;
  int64_t nil = 0;
  for (const LinkedMention &l : links) {
    Json j = ResolutionToJson(l.mention.doc_id, l.mention.mention_id,
                              l.resolution);
    j["surface"] = l.mention.surface;
    rows.push_back(j);
    nil += !l.resolution.entity_id;
    AddWarnings(l.resolution.warnings);
  }
  WriteJsonLines(a.out, rows);
  g_summary.counts = {{"docs", docs.size()},
                      {"mentions", rows.size()},
                      {"nil", nil}};
  return 0;
}

// ---- aggregate / broadcast / calibrate ----

std::map<std::string, TaskRecord> LoadTaskIndex(const std::string &path) {
  std::map<std::string, TaskRecord> out;
  for (TaskRecord &t : LoadTasks(path)) {
    std::string id = t.task_id;
    out.emplace(id, std::move(t));
  }
  return out;
}

struct LabelsByTask {
  std::map<std::string, std::vector<RaterSpanLabel>> spans;
  std::map<std::string, std::vector<RaterChoiceLabel>> choices;
};

LabelsByTask LoadLabels(const std::string &path) {
  LabelsByTask out;
  for (const Json &j : ReadRows(path)) {
    if (j.contains("selections")) {
      RaterChoiceLabel l = RaterChoiceLabelFromJson(j);
      out.choices[l.task_id].push_back(std::move(l));
    } else {
      RaterSpanLabel l = RaterSpanLabelFromJson(j);
      out.spans[l.task_id].push_back(std::move(l));
    }
  }
  return out;
}

const TaskRecord &FindTask(const std::map<std::string, TaskRecord> &tasks,
                           const std::string &id) {
  auto it = tasks.find(id);
  if (it == tasks.end()) {
    throw Error(ErrorCode::kNotFound, "labels refer to unknown task " + id);
  }
  return it->second;
}

struct AggregateArgs {
  std::string labels;
  std::string tasks;
  std::string out;
  std::string method;
  int k = 2;
  int n = 0;
  bool broadcast = false;
};

ConsensusConfig MakeConsensus(const std::string &method, int k, int n,
                              bool open) {
  ConsensusConfig cfg;
  cfg.method = method.empty() ? (open ? ConsensusMethod::kMajority
                                      : ConsensusMethod::kKOfN)
                              : ParseConsensusMethod(method);
  cfg.k = k;
  cfg.expected_raters = n > 0 ? n : (open ? 3 : 5);
  cfg.Validate();
  return cfg;
}

int RunAggregate(const AggregateArgs &a) {
  auto tasks = LoadTaskIndex(a.tasks);
  LabelsByTask labels = LoadLabels(a.labels);
  std::vector<Json> rows;
  int64_t spans = 0, choices = 0;
  for (const auto &[id, group] : labels.spans) {
    const TaskRecord &t = FindTask(tasks, id);
    GoldLabel gold = AggregateSpans(group, MakeConsensus(a.method, a.k, a.n, true),
                                    t.doc);
    if (a.broadcast) gold = BroadcastMentions(t.doc, gold);
    AddWarnings(gold.warnings);
    spans += gold.spans.size();
    rows.push_back(GoldLabelToJson(gold));
  }
  for (const auto &[id, group] : labels.choices) {
    const TaskRecord &t = FindTask(tasks, id);
    GoldLabel gold = AggregateChoices(
        group, MakeConsensus(a.method, a.k, a.n, false), t.mentions);
    choices += gold.choices.size();
    rows.push_back(GoldLabelToJson(gold));
  }
  WriteJsonLines(a.out, rows);
  g_summary.counts = {{"tasks", rows.size()},
                      {"gold_spans", spans},
                      {"gold_choices", choices}};
  return 0;
}

struct BroadcastArgs {
  std::string gold;
  std::string tasks;
  std::string out;
};

int RunBroadcast(const BroadcastArgs &a) {
  auto tasks = LoadTaskIndex(a.tasks);
  std::vector<Json> rows;
  int64_t before = 0, after = 0;
  for (const Json &j : ReadRows(a.gold)) {
    GoldLabel gold = GoldLabelFromJson(j);
    const TaskRecord &t = FindTask(tasks, gold.task_id);
    before += gold.spans.size();
    gold = BroadcastMentions(t.doc, gold);
    after += gold.spans.size();
    rows.push_back(GoldLabelToJson(gold));
  }
  WriteJsonLines(a.out, rows);
  g_summary.counts = {{"tasks", rows.size()},
                      {"spans_before", before},
                      {"spans_after", after}};
  return 0;
}

struct CalibrateArgs {
  std::string labels;
  std::string tasks;
  std::string out;
  std::string rater;
  std::string method;
  int k = 2;
  int n = 0;
  double golden_threshold = 0.6;
  double consensus_threshold = 0.5;
};

int RunCalibrate(const CalibrateArgs &a) {
  auto tasks = LoadTaskIndex(a.tasks);
  LabelsByTask labels = LoadLabels(a.labels);
  if (!labels.choices.empty()) {
    g_summary.warnings.push_back(
        "closed-world labels are ignored by calibrate");
  }
  std::map<std::string, SpanPairs> golden, consensus;
  for (const auto &[id, group] : labels.spans) {
    const TaskRecord &t = FindTask(tasks, id);
    if (t.is_golden) {
      for (const RaterSpanLabel &l : group) {
        golden[l.rater_id].push_back({l.spans, t.expert_spans});
      }
      continue;
    }
    ConsensusConfig cfg = MakeConsensus(a.method, a.k, a.n, true);
    if (static_cast<int>(group.size()) < cfg.Threshold()) continue;
    std::vector<Span> gold = AggregateSpans(group, cfg, t.doc).SpanList();
    for (const RaterSpanLabel &l : group) {
      consensus[l.rater_id].push_back({l.spans, gold});
    }
  }
  std::set<std::string> raters;
  for (const auto &[r, v] : golden) raters.insert(r);
  for (const auto &[r, v] : consensus) raters.insert(r);
  if (!a.rater.empty()) raters = {a.rater};
  CalibrationThresholds th{a.golden_threshold, a.consensus_threshold};
  std::vector<Json> rows;
  int64_t flagged = 0, skipped = 0;
  for (const std::string &r : raters) {
    if (golden[r].empty()) {
      if (!a.rater.empty()) {
        throw Error(ErrorCode::kFailedPrecondition,
                    "rater " + r + " has no golden results");
      }
      g_summary.warnings.push_back("rater " + r + " has no golden results");
      ++skipped;
      continue;
    }
    CalibrationReport rep = RaterCalibration(r, golden[r], consensus[r], th);
    flagged += rep.flagged;
    rows.push_back(rep.ToJson());
  }
  WriteJsonLines(a.out, rows);
  g_summary.counts = {{"raters", rows.size()},
                      {"flagged", flagged},
                      {"skipped", skipped}};
  return 0;
}

// ---- eval ----

struct EvalArgs {
  std::string pred;
  std::string gold;
  std::string docs;
  std::string metric = "span";
  std::string slice;
  std::string level = "span";
  std::string type;
  std::string format = "json";
  std::string out;
  int tolerance = 0;
};

int RunEval(const EvalArgs &a) {
  std::vector<Document> docs;
  if (!a.docs.empty()) docs = LoadDocuments(a.docs);
  DocIndex index = IndexDocs(docs);
  SliceBy slice = ParseSliceBy(a.slice);
  std::vector<Json> pred_rows = ReadRows(a.pred);
  std::vector<Json> gold_rows = ReadRows(a.gold);
  auto type_ok = [&](const Json &j) {
    return a.type.empty() || j.value("entity_type", "") == a.type;
  };
  Json report_json;
  std::string text;
  if (a.metric == "span") {
    SpansByDoc pred, gold;
    for (const Document &d : docs) gold[d.id];
    for (const Json &j : gold_rows) {
      if (type_ok(j)) {
        gold[j.at("doc_id").get<std::string>()].push_back(SpanFromJson(j));
      } else {
        gold[j.at("doc_id").get<std::string>()];
      }
    }
    for (const Json &j : pred_rows) {
      if (type_ok(j)) {
        pred[j.at("doc_id").get<std::string>()].push_back(SpanFromJson(j));
      }
    }
    MatchLevel level = a.level == "token" ? MatchLevel::kToken
                                          : MatchLevel::kSpan;
    if (a.level != "token" && a.level != "span") {
      throw Error(ErrorCode::kInvalidArgument, "level must be span|token");
    }
    EvalReport r = SpanPrf(pred, gold, index, slice, level);
    report_json = r.ToJson();
    text = r.ToText();
  } else if (a.metric == "linking") {
    std::vector<LinkItem> pred, gold;
    for (const Json &j : pred_rows) {
      LinkItem item{j.at("doc_id").get<std::string>(),
                    j.at("mention_id").get<std::string>(), std::nullopt};
      if (!j.at("entity_id").is_null()) {
        item.entity_id = j["entity_id"].get<std::string>();
      }
      pred.push_back(item);
    }
    for (const Json &j : gold_rows) {
      if (!type_ok(j)) continue;
      std::string mid = j.contains("mention_id")
                            ? j["mention_id"].get<std::string>()
                            : MentionId(j.at("doc_id").get<std::string>(),
                                        SpanFromJson(j));
      LinkItem item{j.at("doc_id").get<std::string>(), mid, std::nullopt};
      if (j.contains("entity_id") && !j["entity_id"].is_null()) {
        item.entity_id = j["entity_id"].get<std::string>();
      }
      gold.push_back(item);
    }
    EvalReport r = LinkingAccuracy(pred, gold, index, slice);
    report_json = r.ToJson();
    text = r.ToText();
  } else if (a.metric == "tasks") {
    EntitySetsByTask pred, gold;
    for (const Json &j : gold_rows) {
      auto &set = gold[j.at("doc_id").get<std::string>()];
      if (j.contains("entity_id") && !j["entity_id"].is_null()) {
        set.insert(j["entity_id"].get<std::string>());
      }
    }
    for (const Json &j : pred_rows) {
      if (j.contains("entity_id") && !j["entity_id"].is_null()) {
        pred[j.at("doc_id").get<std::string>()].insert(
            j["entity_id"].get<std::string>());
      }
    }
    TaskRates r = TaskAllCorrectRates(pred, gold, a.tolerance);
    report_json = r.ToJson();
    text = report_json.dump(2) + "\n";
  } else {
    throw Error(ErrorCode::kInvalidArgument,
                "metric must be span|linking|tasks");
  }
  std::string rendered = a.format == "text" ? text : report_json.dump(2) + "\n";
  if (a.out.empty()) {
    std::cout << rendered;
  } else {
    WriteText(a.out, rendered);
  }
  g_summary.counts = {{"pred_rows", pred_rows.size()},
                      {"gold_rows", gold_rows.size()}};
  return 0;
}

// ---- serve ----

HttpServer *g_server = nullptr;

void HandleSignal(int) {
  if (g_server != nullptr) g_server->Stop();
}

struct ServeArgs {
  std::string config;
  int port = -1;
};

int RunServe(const ServeArgs &a) {
  PipelineConfig cfg = PipelineConfig::Load(a.config);
  if (a.port >= 0) cfg.port = a.port;
  cfg.CheckFiles();
  if (cfg.tasks.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "config needs a tasks file");
  }
  ServiceOptions opts;
  opts.golden_rate = cfg.golden_rate;
  opts.raters_open = cfg.raters_open;
  opts.raters_closed = cfg.raters_closed;
  opts.seed = cfg.seed;
  opts.consensus_method = cfg.consensus_method;
  opts.consensus_k = cfg.consensus_k;
  opts.event_log = cfg.event_log;
  LabelingService service(LoadTasks(cfg.tasks), opts);
  if (!cfg.heads.empty()) {
    ExtractBackend backend;
    backend.heads = LoadHeads(cfg.heads);
    backend.decode = cfg.decode;
    if (!backend.heads.empty()) {
      backend.encoder =
          std::make_shared<Encoder>(backend.heads.front().encoder_spec);
    }
    if (!cfg.dictionary.empty() && !cfg.linker.empty() &&
        !cfg.entity_embeddings.empty()) {
      backend.matcher = std::make_shared<CompiledMatcher>(
          CompiledMatcher::Compile(LoadTable(cfg.dictionary)));
      backend.linker = LoadLinker(cfg.linker);
      if (cfg.nil_threshold >= 0.0) {
        backend.linker->nil_threshold = cfg.nil_threshold;
      }
      backend.entities = LoadEntityEmbeddings(cfg.entity_embeddings);
    }
    service.SetExtractBackend(std::move(backend));
  }
  HttpServer server(&service);
  g_server = &server;
  std::signal(SIGINT, HandleSignal);
  std::signal(SIGTERM, HandleSignal);
  std::cerr << Json{{"listening", cfg.host + ":" + std::to_string(cfg.port)}}
                   .dump()
            << std::endl;
  server.Listen(cfg.host, cfg.port);
  g_server = nullptr;
  return 0;
}

int Main(int argc, char **argv) {
  CLI::App app{"entex: entity extraction pipeline and labeling service"};
  app.require_subcommand(1);
  std::function<int()> run;

  SynthArgs synth;
  auto *c = app.add_subcommand("synth", "Generate a synthetic corpus");
  c->add_option("--out-dir", synth.out_dir)->required();
  c->add_option("--docs", synth.docs);
  c->add_option("--entities", synth.entities);
  c->add_option("--seed", synth.seed);
  c->add_option("--golden-fraction", synth.golden_fraction);
  c->callback([&] { run = [&] { return RunSynth(synth); }; });

  BuildDictArgs bd;
  c = app.add_subcommand("build-dict", "Build the alias table from a dump");
  c->add_option("--dump", bd.dump)->required();
  c->add_option("--out", bd.out)->required();
  c->add_option("--max-alias-length", bd.max_alias_length);
  c->add_flag("--keep-numeric", bd.keep_numeric);
  c->add_option("--max-redirect-depth", bd.max_depth);
  c->add_option("--report", bd.report);
  c->callback([&] { run = [&] { return RunBuildDict(bd); }; });

  TrainHeadArgs th;
  c = app.add_subcommand("train-head", "Train extraction heads");
  c->add_option("--docs", th.docs)->required();
  c->add_option("--gold", th.gold)->required();
  c->add_option("--type", th.types, "Entity types (default: all in gold)");
  c->add_option("--out", th.out)->required();
  c->add_option("--dim", th.dim);
  c->add_option("--ngram", th.ngram);
  c->add_option("--epochs", th.epochs);
  c->add_option("--lr", th.lr);
  c->add_option("--hidden", th.hidden);
  c->add_option("--seed", th.seed);
  c->callback([&] { run = [&] { return RunTrainHead(th); }; });

  ExtractArgs ex;
  c = app.add_subcommand("extract", "Extract mentions with trained heads");
  c->add_option("--docs", ex.docs)->required();
  c->add_option("--heads", ex.heads)->required();
  c->add_option("--out", ex.out)->required();
  c->add_option("--threshold", ex.threshold);
  c->add_option("--min-tokens", ex.min_tokens);
  c->add_option("--max-tokens", ex.max_tokens);
  c->add_flag("--no-embeddings", ex.no_embeddings);
  c->callback([&] { run = [&] { return RunExtract(ex); }; });

  TrainSiameseArgs ts;
  c = app.add_subcommand("train-siamese", "Train the mention pair scorer");
  c->add_option("--docs", ts.docs)->required();
  c->add_option("--gold", ts.gold)->required();
  c->add_option("--out", ts.out)->required();
  c->add_option("--dim", ts.dim);
  c->add_option("--pairs", ts.pairs);
  c->add_option("--epochs", ts.epochs);
  c->add_option("--lr", ts.lr);
  c->add_option("--seed", ts.seed);
  c->callback([&] { run = [&] { return RunTrainSiamese(ts); }; });

  ClusterArgs cl;
  c = app.add_subcommand("cluster", "Cluster mentions into open entities");
  c->add_option("--mentions", cl.mentions)->required();
  c->add_option("--siamese", cl.siamese)->required();
  c->add_option("--out", cl.out)->required();
  c->add_option("--edges", cl.edges);
  c->add_option("--threshold", cl.threshold);
  c->add_option("--blocking", cl.blocking)
      ->check(CLI::IsMember({"surface", "none"}));
  c->add_option("--resolution", cl.resolution);
  c->add_option("--seed", cl.seed);
  c->callback([&] { run = [&] { return RunCluster(cl); }; });

  EmbedArgs em;
  c = app.add_subcommand("embed-entities", "Embed entity descriptions");
  c->add_option("--texts", em.texts)->required();
  c->add_option("--out", em.out)->required();
  c->add_option("--dim", em.dim);
  c->add_option("--ngram", em.ngram);
  c->callback([&] { run = [&] { return RunEmbed(em); }; });

  CandidatesArgs ca;
  c = app.add_subcommand("candidates", "Match dictionary aliases");
  c->add_option("--docs", ca.docs)->required();
  c->add_option("--dict", ca.dict)->required();
  c->add_option("--out", ca.out)->required();
  c->add_option("--tasks-out", ca.tasks_out);
  c->add_flag("--all-overlaps", ca.all_overlaps);
  c->callback([&] { run = [&] { return RunCandidates(ca); }; });

  TrainLinkerArgs tl;
  c = app.add_subcommand("train-linker", "Train the candidate scorer");
  c->add_option("--docs", tl.docs)->required();
  c->add_option("--gold", tl.gold)->required();
  c->add_option("--dict", tl.dict)->required();
  c->add_option("--entities", tl.entities)->required();
  c->add_option("--out", tl.out)->required();
  c->add_option("--epochs", tl.epochs);
  c->add_option("--lr", tl.lr);
  c->add_option("--nil-threshold", tl.nil_threshold);
  c->add_flag("--fixed-q", tl.fixed_q);
  c->add_option("--seed", tl.seed);
  c->callback([&] { run = [&] { return RunTrainLinker(tl); }; });

  LinkArgs li;
  c = app.add_subcommand("link", "Link dictionary mentions to entities");
  c->add_option("--docs", li.docs)->required();
  c->add_option("--dict", li.dict)->required();
  c->add_option("--entities", li.entities)->required();
  c->add_option("--linker", li.linker)->required();
  c->add_option("--out", li.out)->required();
  c->add_option("--nil-threshold", li.nil_threshold);
  c->callback([&] { run = [&] { return RunLink(li); }; });

  AggregateArgs ag;
  c = app.add_subcommand("aggregate", "Aggregate rater labels into gold");
  c->add_option("--labels", ag.labels)->required();
  c->add_option("--tasks", ag.tasks)->required();
  c->add_option("--out", ag.out)->required();
  c->add_option("--method", ag.method)
      ->check(CLI::IsMember({"and", "or", "majority", "k_of_n"}));
  c->add_option("--k", ag.k);
  c->add_option("--n", ag.n);
  c->add_flag("--broadcast", ag.broadcast);
  c->callback([&] { run = [&] { return RunAggregate(ag); }; });

  BroadcastArgs br;
  c = app.add_subcommand("broadcast", "Broadcast gold spans to repeats");
  c->add_option("--gold", br.gold)->required();
  c->add_option("--tasks", br.tasks)->required();
  c->add_option("--out", br.out)->required();
  c->callback([&] { run = [&] { return RunBroadcast(br); }; });

  EvalArgs ev;
  c = app.add_subcommand("eval", "Score predictions against gold");
  c->add_option("--pred", ev.pred)->required();
  c->add_option("--gold", ev.gold)->required();
  c->add_option("--docs", ev.docs);
  c->add_option("--metric", ev.metric)
      ->check(CLI::IsMember({"span", "linking", "tasks"}));
  c->add_option("--slice", ev.slice)
      ->check(CLI::IsMember({"", "none", "language", "doc_type"}));
  c->add_option("--level", ev.level)->check(CLI::IsMember({"span", "token"}));
  c->add_option("--type", ev.type);
  c->add_option("--format", ev.format)->check(CLI::IsMember({"json", "text"}));
  c->add_option("--tolerance", ev.tolerance);
  c->add_option("--out", ev.out);
  c->callback([&] { run = [&] { return RunEval(ev); }; });

  CalibrateArgs cb;
  c = app.add_subcommand("calibrate", "Rater calibration reports");
  c->add_option("--labels", cb.labels)->required();
  c->add_option("--tasks", cb.tasks)->required();
  c->add_option("--out", cb.out)->required();
  c->add_option("--rater", cb.rater);
  c->add_option("--method", cb.method)
      ->check(CLI::IsMember({"and", "or", "majority", "k_of_n"}));
  c->add_option("--k", cb.k);
  c->add_option("--n", cb.n);
  c->add_option("--golden-threshold", cb.golden_threshold);
  c->add_option("--consensus-threshold", cb.consensus_threshold);
  c->callback([&] { run = [&] { return RunCalibrate(cb); }; });

  ServeArgs sv;
  c = app.add_subcommand("serve", "Run the labeling HTTP service");
  c->add_option("--config", sv.config)->required();
  c->add_option("--port", sv.port);
  c->callback([&] { run = [&] { return RunServe(sv); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 2;
  }
  g_summary.command = app.get_subcommands().front()->get_name();
  int code;
  try {
    code = run();
  } catch (const Error &e) {
    code = e.code() == ErrorCode::kIo || e.code() == ErrorCode::kNotFound ? 3 : 1;
    g_summary.Print(code, std::string(ErrorCodeName(e.code())) + ": " + e.what());
    return code;
  } catch (const std::exception &e) {
    g_summary.Print(1, e.what());
    return 1;
  }
  g_summary.Print(code);
  return code;
}

}  // namespace
}  // namespace entex

int main(int argc, char **argv) { return entex::Main(argc, argv); }
