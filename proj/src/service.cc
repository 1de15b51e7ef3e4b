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

#include "entex/service.h"

#include <filesystem>

#include "entex/error.h"
#include "entex/random.h"
#include "entex/text.h"

namespace entex {

namespace {

Reply ErrorReply(int status, const std::string &code,
                 const std::string &message, Json detail = Json::object()) {
  Json body = {{"code", code}, {"message", message}};
  for (auto it = detail.begin(); it != detail.end(); ++it) {
    body[it.key()] = it.value();
  }
  return {status, body};
}

int StatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNotFound:
      return 404;
    case ErrorCode::kConflict:
    case ErrorCode::kFailedPrecondition:
      return 409;
    case ErrorCode::kInvalidArgument:
      return 422;
    case ErrorCode::kParse:
      return 400;
    default:
      return 500;
  }
}

Reply FromError(const Error &e) {
  return ErrorReply(StatusFor(e.code()), ErrorCodeName(e.code()), e.what());
}

uint64_t DrawSeed(uint64_t seed, const std::string &rater, size_t index) {
  uint64_t h = Fnv1a64(rater);
  h = Fnv1a64(std::string_view(reinterpret_cast<const char *>(&seed),
                               sizeof(seed)),
              h);
  uint64_t i = index;
  return Fnv1a64(
      std::string_view(reinterpret_cast<const char *>(&i), sizeof(i)), h);
}

// Closed-world selections as spans so that both task kinds share the
// exact-match comparison. The entity id rides in the field name.
std::vector<Span> SelectionItems(const TaskRecord &task,
                                 const std::vector<ChoiceSelection> &sel) {
  std::vector<Span> out;
  for (const ChoiceSelection &s : sel) {
    if (!s.entity_id) continue;
    for (const CandidateMention &m : task.mentions) {
      if (m.mention_id == s.mention_id) {
        out.push_back({m.span.field + "\x1f" + *s.entity_id, m.span.start,
                       m.span.end});
      }
    }
  }
  return out;
}

std::vector<Span> GoldChoiceItems(const TaskRecord &task,
                                  const GoldLabel &gold) {
  std::vector<ChoiceSelection> sel;
  for (const GoldChoice &c : gold.choices) {
    sel.push_back({c.mention_id, c.entity_id});
  }
  return SelectionItems(task, sel);
}

}  // namespace

const char *TaskKindName(TaskKind kind) {
  return kind == TaskKind::kOpenWorld ? "open_world" : "closed_world";
}

TaskKind ParseTaskKind(std::string_view name) {
  if (name == "open_world") return TaskKind::kOpenWorld;
  if (name == "closed_world") return TaskKind::kClosedWorld;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown task kind: " + std::string(name));
}

Json TaskRecord::ToJson() const {
  Json j = {{"task_id", task_id},
            {"kind", TaskKindName(kind)},
            {"document", DocumentToJson(doc)},
            {"is_golden", is_golden}};
  if (kind == TaskKind::kClosedWorld) {
    Json mentions_json = Json::array();
    for (const CandidateMention &m : mentions) {
      mentions_json.push_back(CandidateMentionToJson(m));
    }
    j["mentions"] = mentions_json;
  }
  if (is_golden) {
    Json expert = Json::object();
    if (kind == TaskKind::kOpenWorld) {
      expert["spans"] = Json::array();
      for (const Span &s : expert_spans) expert["spans"].push_back(SpanToJson(s));
    } else {
      RaterChoiceLabel l{task_id, "", expert_selections};
      expert["selections"] = RaterChoiceLabelToJson(l)["selections"];
    }
    j["expert_label"] = expert;
  }
  return j;
}

TaskRecord TaskRecord::FromJson(const Json &j) {
  TaskRecord t;
  try {
    t.task_id = j.at("task_id").get<std::string>();
    t.kind = ParseTaskKind(j.at("kind").get<std::string>());
    t.doc = DocumentFromJson(j.at("document"));
    if (t.kind == TaskKind::kClosedWorld) {
      for (const Json &m : j.at("mentions")) {
        t.mentions.push_back(CandidateMentionFromJson(m));
      }
    }
    t.is_golden = j.value("is_golden", false);
    if (t.is_golden) {
      const Json &expert = j.at("expert_label");
      if (t.kind == TaskKind::kOpenWorld) {
        for (const Json &s : expert.at("spans")) {
          t.expert_spans.push_back(SpanFromJson(s));
        }
      } else {
        Json wrapped = {{"task_id", t.task_id},
                        {"rater_id", ""},
                        {"selections", expert.at("selections")}};
        t.expert_selections = RaterChoiceLabelFromJson(wrapped).selections;
      }
    } else if (j.contains("expert_label")) {
      throw Error(ErrorCode::kInvalidArgument,
                  "task " + t.task_id + " has an expert label but is not golden");
    }
  } catch (const Json::exception &e) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string("bad task record: ") + e.what());
  }
  if (t.task_id.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "task id is empty");
  }
  return t;
}

Json TaskRecord::RaterPayload() const {
  if (kind == TaskKind::kClosedWorld) {
    LabelingTask task = CandidatesToTask(mentions, doc);
    Json j = task.ToJson();
    j["task_id"] = task_id;
    j.erase("auto_skippable");
    return j;
  }
  return {{"task_id", task_id},
          {"kind", TaskKindName(kind)},
          {"document", DocumentToJson(doc)}};
}

std::vector<TaskRecord> LoadTasks(const std::string &path) {
  std::vector<TaskRecord> out;
  std::set<std::string> ids;
  std::vector<Json> rows = ReadJsonLines(path);
  for (size_t i = 0; i < rows.size(); ++i) {
    TaskRecord t;
    try {
      t = TaskRecord::FromJson(rows[i]);
    } catch (const Error &e) {
      throw Error(e.code(), path + ": record " + std::to_string(i + 1) + ": " +
                                e.what());
    }
    if (!ids.insert(t.task_id).second) {
      throw Error(ErrorCode::kConflict, path + ": duplicate task " + t.task_id);
    }
    out.push_back(std::move(t));
  }
  return out;
}

LabelingService::LabelingService(std::vector<TaskRecord> tasks,
                                 ServiceOptions options)
    : options_(std::move(options)) {
  if (!(options_.golden_rate >= 0.0 && options_.golden_rate < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "golden_rate must lie in [0, 1)");
  }
  bool replay = !options_.event_log.empty() &&
                std::filesystem::exists(options_.event_log);
  if (replay) Replay(options_.event_log);
  if (!options_.event_log.empty()) {
    log_.open(options_.event_log, std::ios::app);
    if (!log_) {
      throw Error(ErrorCode::kIo, "cannot open event log " + options_.event_log);
    }
  }
  for (TaskRecord &t : tasks) {
    if (!tasks_.count(t.task_id)) AddTask(std::move(t), true);
  }
  if (options_.golden_rate > 0.0 && golden_order_.empty()) {
    throw Error(ErrorCode::kFailedPrecondition,
                "golden_rate > 0 but there are no golden tasks");
  }
}

LabelingService::~LabelingService() = default;

void LabelingService::SetExtractBackend(ExtractBackend backend) {
  std::lock_guard<std::mutex> lock(mu_);
  backend_ = std::make_shared<const ExtractBackend>(std::move(backend));
}

void LabelingService::Append(const Json &event) {
  if (!log_.is_open()) return;
  Json e = event;
  e["seq"] = ++seq_;
  log_ << e.dump() << '\n';
  log_.flush();
}

void LabelingService::AddTask(TaskRecord record, bool log) {
  if (log) Append({{"event", "task_created"}, {"task", record.ToJson()}});
  std::string id = record.task_id;
  TaskState state;
  bool skip = record.kind == TaskKind::kClosedWorld && record.mentions.empty();
  bool golden = record.is_golden;
  state.record = std::move(record);
  state.complete = skip;
  tasks_.emplace(id, std::move(state));
  if (skip) return;
  (golden ? golden_order_ : regular_order_).push_back(id);
}

void LabelingService::Replay(const std::string &path) {
  std::vector<Json> events = ReadJsonLines(path);
  for (const Json &e : events) {
    std::string kind = e.at("event").get<std::string>();
    seq_ = std::max<uint64_t>(seq_, e.value("seq", 0));
    if (kind == "task_created") {
      TaskRecord t = TaskRecord::FromJson(e.at("task"));
      if (!tasks_.count(t.task_id)) AddTask(std::move(t), false);
    } else if (kind == "task_assigned") {
      std::string rater = e.at("rater_id").get<std::string>();
      std::string task = e.at("task_id").get<std::string>();
      auto it = tasks_.find(task);
      if (it == tasks_.end()) {
        throw Error(ErrorCode::kCorrupt, path + ": assignment of unknown task");
      }
      RaterState &r = Rater(rater);
      r.pending = task;
      r.seen.insert(task);
      r.served.push_back(task);
      if (it->second.record.is_golden) ++r.golden_served;
      auto &assigned = it->second.assigned;
      if (std::find(assigned.begin(), assigned.end(), rater) == assigned.end()) {
        assigned.push_back(rater);
      }
    } else if (kind == "label_submitted") {
      Reply r = Submit(e.at("task_id").get<std::string>(),
                       e.at("rater_id").get<std::string>(), e.at("label"),
                       false);
      if (r.status != 200) {
        throw Error(ErrorCode::kCorrupt,
                    path + ": replayed label rejected: " + r.body.dump());
      }
    } else {
      throw Error(ErrorCode::kCorrupt, path + ": unknown event " + kind);
    }
  }
}

LabelingService::RaterState &LabelingService::Rater(const std::string &id) {
  return raters_.try_emplace(id).first->second;
}

int LabelingService::Expected(const TaskState &task) const {
  return task.record.kind == TaskKind::kOpenWorld ? options_.raters_open
                                                  : options_.raters_closed;
}

std::optional<std::string> LabelingService::Assign(const std::string &id) {
  RaterState &r = Rater(id);
  if (r.pending) return r.pending;
  std::optional<std::string> pick;
  bool golden = false;
  if (options_.golden_rate > 0.0) {
    Rng draw(DrawSeed(options_.seed, id, r.served.size()));
    if (draw.Bernoulli(options_.golden_rate)) {
      for (const std::string &g : golden_order_) {
        if (!r.seen.count(g)) {
          pick = g;
          golden = true;
          break;
        }
      }
    }
  }
  if (!pick) {
    for (const std::string &t : regular_order_) {
      const TaskState &state = tasks_.at(t);
      if (state.complete || r.seen.count(t)) continue;
      if (static_cast<int>(state.assigned.size()) >= Expected(state)) continue;
      pick = t;
      break;
    }
  }
  if (!pick) return std::nullopt;
  TaskState &state = tasks_.at(*pick);
  state.assigned.push_back(id);
  r.pending = *pick;
  r.seen.insert(*pick);
  r.served.push_back(*pick);
  if (golden) ++r.golden_served;
  Append({{"event", "task_assigned"}, {"task_id", *pick}, {"rater_id", id}});
  return pick;
}

Reply LabelingService::NextTask(const std::string &rater_id) {
  if (rater_id.empty()) {
    return ErrorReply(400, "invalid_argument", "rater_id is required");
  }
  std::lock_guard<std::mutex> lock(mu_);
  std::optional<std::string> task = Assign(rater_id);
  if (!task) return {204, nullptr};
  return {200, {{"task", tasks_.at(*task).record.RaterPayload()}}};
}

Reply LabelingService::SubmitLabel(const std::string &task_id,
                                   const Json &body) {
  if (!body.is_object() || !body.contains("rater_id") ||
      !body["rater_id"].is_string()) {
    return ErrorReply(422, "invalid_label", "body needs a string rater_id");
  }
  std::lock_guard<std::mutex> lock(mu_);
  return Submit(task_id, body["rater_id"].get<std::string>(), body, true);
}

Reply LabelingService::Submit(const std::string &task_id,
                              const std::string &rater_id, const Json &body,
                              bool log) {
  auto tit = tasks_.find(task_id);
  if (tit == tasks_.end()) {
    return ErrorReply(404, "not_found", "unknown task " + task_id);
  }
  auto rit = raters_.find(rater_id);
  if (rit == raters_.end()) {
    return ErrorReply(404, "not_found", "unknown rater " + rater_id);
  }
  TaskState &task = tit->second;
  RaterState &rater = rit->second;
  if (!rater.seen.count(task_id)) {
    return ErrorReply(409, "conflict",
                      "task " + task_id + " was not assigned to " + rater_id);
  }
  if (task.complete) {
    return ErrorReply(409, "conflict", "task " + task_id + " is complete");
  }

  Json stored;
  std::vector<std::string> warnings;
  if (task.record.kind == TaskKind::kOpenWorld) {
    if (!body.contains("spans") || !body["spans"].is_array()) {
      return ErrorReply(422, "invalid_label", "open-world labels need spans");
    }
    std::vector<Span> spans;
    for (const Json &s : body["spans"]) {
      try {
        spans.push_back(SpanFromJson(s));
      } catch (const Error &e) {
        return ErrorReply(422, "invalid_label", e.what(), {{"span", s}});
      }
    }
    SpanCheck check = CheckRaterSpans(task.record.doc, spans);
    if (check.invalid) {
      return ErrorReply(422, "invalid_label", check.error,
                        {{"span", SpanToJson(*check.invalid)}});
    }
    warnings = check.warnings;
    stored = RaterSpanLabelToJson({task_id, rater_id, check.spans});
  } else {
    if (!body.contains("selections") || !body["selections"].is_array()) {
      return ErrorReply(422, "invalid_label",
                        "closed-world labels need selections");
    }
    RaterChoiceLabel label{task_id, rater_id, {}};
    std::set<std::string> seen;
    for (const Json &s : body["selections"]) {
      ChoiceSelection sel;
      try {
        Json wrapped = {{"task_id", task_id},
                        {"rater_id", rater_id},
                        {"selections", Json::array({s})}};
        sel = RaterChoiceLabelFromJson(wrapped).selections.front();
      } catch (const Error &e) {
        return ErrorReply(422, "invalid_label", e.what(), {{"selection", s}});
      }
      const CandidateMention *mention = nullptr;
      for (const CandidateMention &m : task.record.mentions) {
        if (m.mention_id == sel.mention_id) mention = &m;
      }
      if (mention == nullptr) {
        return ErrorReply(422, "invalid_label",
                          "unknown mention " + sel.mention_id,
                          {{"selection", s}});
      }
      if (!seen.insert(sel.mention_id).second) {
        return ErrorReply(422, "invalid_label",
                          "several selections for " + sel.mention_id,
                          {{"selection", s}});
      }
      if (sel.entity_id &&
          std::none_of(mention->candidates.begin(), mention->candidates.end(),
                       [&](const Candidate &c) {
                         return c.entity_id == *sel.entity_id;
                       })) {
        return ErrorReply(422, "invalid_label",
                          *sel.entity_id + " is not a candidate of " +
                              sel.mention_id,
                          {{"selection", s}});
      }
      label.selections.push_back(std::move(sel));
    }
    stored = RaterChoiceLabelToJson(label);
  }

  bool replaced = task.labels.count(rater_id) > 0;
  task.labels[rater_id] = stored;
  if (rater.pending == task_id) rater.pending.reset();
  if (!task.record.is_golden &&
      static_cast<int>(task.labels.size()) >= Expected(task)) {
    task.complete = true;
  }
  if (log) {
    Append({{"event", "label_submitted"},
            {"task_id", task_id},
            {"rater_id", rater_id},
            {"label", stored}});
  }
  return {200,
          {{"task_id", task_id},
           {"rater_id", rater_id},
           {"status", "accepted"},
           {"replaced", replaced},
           {"warnings", warnings}}};
}

ConsensusConfig LabelingService::ConsensusFor(const TaskState &task,
                                              ConsensusMethod method,
                                              int k) const {
  ConsensusConfig cfg;
  cfg.method = method;
  cfg.k = k;
  cfg.expected_raters =
      std::max(Expected(task), static_cast<int>(task.labels.size()));
  return cfg;
}

Reply LabelingService::Consensus(const std::string &task_id,
                                 const std::string &method,
                                 std::optional<int> k) {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = tasks_.find(task_id);
  if (it == tasks_.end()) {
    return ErrorReply(404, "not_found", "unknown task " + task_id);
  }
  const TaskState &task = it->second;
  bool open = task.record.kind == TaskKind::kOpenWorld;
  try {
    ConsensusMethod m;
    if (!method.empty()) {
      m = ParseConsensusMethod(method);
    } else {
      m = open ? options_.consensus_method : ConsensusMethod::kKOfN;
    }
    ConsensusConfig cfg =
        ConsensusFor(task, m, k.value_or(options_.consensus_k));
    cfg.Validate();
    int have = static_cast<int>(task.labels.size());
    if (have < cfg.Threshold()) {
      return ErrorReply(409, "not_ready",
                        "consensus needs " + std::to_string(cfg.Threshold()) +
                            " raters, have " + std::to_string(have));
    }
    GoldLabel gold;
    if (open) {
      gold = AggregateSpans(CollectSpanLabels(task_id), cfg, task.record.doc);
    } else {
      gold = AggregateChoices(CollectChoiceLabels(task_id), cfg, task.record.mentions);
    }
    Json body = GoldLabelToJson(gold);
    body["raters"] = have;
    return {200, body};
  } catch (const Error &e) {
    Reply r = FromError(e);
    if (r.status == 422) r.status = 400;
    return r;
  }
}

Reply LabelingService::Calibration(const std::string &rater_id) {
  std::lock_guard<std::mutex> lock(mu_);
  if (!raters_.count(rater_id)) {
    return ErrorReply(404, "not_found", "unknown rater " + rater_id);
  }
  SpanPairs golden, consensus;
  for (const auto &[id, task] : tasks_) {
    auto lit = task.labels.find(rater_id);
    if (lit == task.labels.end()) continue;
    bool open = task.record.kind == TaskKind::kOpenWorld;
    std::vector<Span> mine;
    if (open) {
      mine = RaterSpanLabelFromJson(lit->second).spans;
    } else {
      mine = SelectionItems(task.record,
                            RaterChoiceLabelFromJson(lit->second).selections);
    }
    if (task.record.is_golden) {
      std::vector<Span> expert =
          open ? task.record.expert_spans
               : SelectionItems(task.record, task.record.expert_selections);
      golden.push_back({mine, expert});
      continue;
    }
    ConsensusConfig cfg = ConsensusFor(
        task, open ? options_.consensus_method : ConsensusMethod::kKOfN,
        options_.consensus_k);
    if (static_cast<int>(task.labels.size()) < cfg.Threshold()) continue;
    if (open) {
      GoldLabel gold = AggregateSpans(CollectSpanLabels(id), cfg, task.record.doc);
      consensus.push_back({mine, gold.SpanList()});
    } else {
      GoldLabel gold = AggregateChoices(CollectChoiceLabels(id), cfg,
                                        task.record.mentions);
      consensus.push_back({mine, GoldChoiceItems(task.record, gold)});
    }
  }
  try {
    return {200, RaterCalibration(rater_id, golden, consensus,
                                  options_.calibration)
                     .ToJson()};
  } catch (const Error &e) {
    return FromError(e);
  }
}

Reply LabelingService::Extract(const Json &document) {
  std::shared_ptr<const ExtractBackend> backend;
  {
    std::lock_guard<std::mutex> lock(mu_);
    backend = backend_;
  }
  if (!backend || !backend->encoder) {
    return ErrorReply(503, "unavailable", "no extraction model is loaded");
  }
  Document doc;
  try {
    doc = DocumentFromJson(document.contains("document") ? document["document"]
                                                         : document);
  } catch (const Error &e) {
    return ErrorReply(422, "invalid_argument", e.what());
  }
  Json mentions = Json::array();
  ExtractionResult result =
      MultiTaskExtract(doc, backend->heads, backend->decode, *backend->encoder);
  for (const auto &[type, found] : result) {
    for (const ExtractedMention &m : found) {
      mentions.push_back(ExtractedMentionToJson(m));
    }
  }
  Json entities = Json::array();
  if (backend->matcher && backend->linker) {
    DocumentEncoding encoding = backend->encoder->Encode(doc);
    for (const CandidateMention &c : backend->matcher->FindCandidates(doc)) {
      const TokenEncoding *field = nullptr;
      for (const TokenEncoding &e : encoding) {
        if (e.field == c.span.field) field = &e;
      }
      Resolution r = Resolve(c, Pool(*field, c.span), backend->entities,
                             *backend->linker);
      Json j = ResolutionToJson(doc.id, c.mention_id, r);
      j["field"] = c.span.field;
      j["start"] = c.span.start;
      j["end"] = c.span.end;
      j["surface"] = c.surface;
      entities.push_back(j);
    }
  }
  return {200,
          {{"doc_id", doc.id}, {"mentions", mentions}, {"entities", entities}}};
}

std::vector<RaterSpanLabel> LabelingService::SpanLabels(
    const std::string &task_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  return CollectSpanLabels(task_id);
}

std::vector<RaterChoiceLabel> LabelingService::ChoiceLabels(
    const std::string &task_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  return CollectChoiceLabels(task_id);
}

std::vector<RaterSpanLabel> LabelingService::CollectSpanLabels(
    const std::string &task_id) const {
  std::vector<RaterSpanLabel> out;
  auto it = tasks_.find(task_id);
  if (it == tasks_.end()) return out;
  for (const auto &[rater, label] : it->second.labels) {
    out.push_back(RaterSpanLabelFromJson(label));
  }
  return out;
}

std::vector<RaterChoiceLabel> LabelingService::CollectChoiceLabels(
    const std::string &task_id) const {
  std::vector<RaterChoiceLabel> out;
  auto it = tasks_.find(task_id);
  if (it == tasks_.end()) return out;
  for (const auto &[rater, label] : it->second.labels) {
    out.push_back(RaterChoiceLabelFromJson(label));
  }
  return out;
}

int LabelingService::ExpectedRaters(const std::string &task_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  return Expected(tasks_.at(task_id));
}

std::vector<std::string> LabelingService::ServedTo(
    const std::string &rater_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = raters_.find(rater_id);
  return it == raters_.end() ? std::vector<std::string>{} : it->second.served;
}

int LabelingService::GoldenServed(const std::string &rater_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  auto it = raters_.find(rater_id);
  return it == raters_.end() ? 0 : it->second.golden_served;
}

bool LabelingService::IsComplete(const std::string &task_id) const {
  std::lock_guard<std::mutex> lock(mu_);
  return tasks_.at(task_id).complete;
}

}  // namespace entex
