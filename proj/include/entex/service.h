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

// Labeling service: task queue, label collection, golden-task injection,
// consensus and calibration. LabelingService holds all state behind one
// mutex and persists every state change to an append-only JSONL event log
// that is replayed at startup. HttpServer exposes it over HTTP/1.1.

#ifndef ENTEX_SERVICE_H_
#define ENTEX_SERVICE_H_

#include <deque>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "entex/document.h"
#include "entex/encoder.h"
#include "entex/extraction.h"
#include "entex/labeling.h"
#include "entex/linking.h"
#include "entex/matcher.h"

namespace httplib {
class Server;
}

namespace entex {

enum class TaskKind { kOpenWorld, kClosedWorld };
const char *TaskKindName(TaskKind kind);
TaskKind ParseTaskKind(std::string_view name);

struct TaskRecord {
  std::string task_id;
  TaskKind kind = TaskKind::kOpenWorld;
  Document doc;
  std::vector<CandidateMention> mentions;  // closed world
  bool is_golden = false;
  std::vector<Span> expert_spans;                 // golden open world
  std::vector<ChoiceSelection> expert_selections;  // golden closed world

  // Full record, including golden fields, for task files and the event log.
  Json ToJson() const;
  static TaskRecord FromJson(const Json &j);
  // What raters see. Identical in shape for golden and regular tasks.
  Json RaterPayload() const;
};

std::vector<TaskRecord> LoadTasks(const std::string &path);

struct ServiceOptions {
  double golden_rate = 0.1;
  int raters_open = 3;
  int raters_closed = 5;
  uint64_t seed = 17;
  ConsensusMethod consensus_method = ConsensusMethod::kMajority;
  int consensus_k = 2;
  CalibrationThresholds calibration;
  std::string event_log;  // empty: in-memory only
};

// HTTP status plus JSON body. Errors carry {code, message} and optional
// detail fields.
struct Reply {
  int status = 200;
  Json body;
};

// Optional inference backend for /v1/extract.
struct ExtractBackend {
  std::vector<HeadParams> heads;
  DecodeConfig decode;
  std::shared_ptr<const Encoder> encoder;
  std::shared_ptr<const CompiledMatcher> matcher;
  EntityEmbeddingStore entities;
  std::optional<LinkerParams> linker;
};

class LabelingService {
 public:
  // Replays `options.event_log` when it exists, then registers any task not
  // yet in the log. Throws Error(kFailedPrecondition) when golden_rate > 0
  // and no golden task exists.
  LabelingService(std::vector<TaskRecord> tasks, ServiceOptions options);
  ~LabelingService();

  LabelingService(const LabelingService &) = delete;
  LabelingService &operator=(const LabelingService &) = delete;

  // 200 {task: payload} or 204 when nothing is left for the rater.
  Reply NextTask(const std::string &rater_id);
  // Body: {rater_id, spans:[...]} or {rater_id, selections:[...]}.
  Reply SubmitLabel(const std::string &task_id, const Json &body);
  // method: and | or | majority | k_of_n; k for k_of_n.
  Reply Consensus(const std::string &task_id, const std::string &method,
                  std::optional<int> k);
  Reply Calibration(const std::string &rater_id);
  Reply Extract(const Json &document);

  void SetExtractBackend(ExtractBackend backend);

  // Labels stored for one task, in rater id order.
  std::vector<RaterSpanLabel> SpanLabels(const std::string &task_id) const;
  std::vector<RaterChoiceLabel> ChoiceLabels(const std::string &task_id) const;
  int ExpectedRaters(const std::string &task_id) const;
  // Task ids served to a rater, in order.
  std::vector<std::string> ServedTo(const std::string &rater_id) const;
  int GoldenServed(const std::string &rater_id) const;
  bool IsComplete(const std::string &task_id) const;

 private:
  struct TaskState {
    TaskRecord record;
    std::vector<std::string> assigned;  // distinct raters, in order
    std::map<std::string, Json> labels;  // rater -> normalized label json
    bool complete = false;
  };
  struct RaterState {
    std::optional<std::string> pending;
    std::set<std::string> seen;
    std::vector<std::string> served;
    int golden_served = 0;
  };

  void AddTask(TaskRecord record, bool log);
  std::vector<RaterSpanLabel> CollectSpanLabels(const std::string &id) const;
  std::vector<RaterChoiceLabel> CollectChoiceLabels(
      const std::string &id) const;
  RaterState &Rater(const std::string &rater_id);
  std::optional<std::string> Assign(const std::string &rater_id);
  Reply Submit(const std::string &task_id, const std::string &rater_id,
               const Json &body, bool log);
  ConsensusConfig ConsensusFor(const TaskState &task, ConsensusMethod method,
                               int k) const;
  int Expected(const TaskState &task) const;
  void Append(const Json &event);
  void Replay(const std::string &path);

  ServiceOptions options_;
  mutable std::mutex mu_;
  std::map<std::string, TaskState> tasks_;
  std::vector<std::string> regular_order_;
  std::vector<std::string> golden_order_;
  std::map<std::string, RaterState> raters_;
  std::ofstream log_;
  uint64_t seq_ = 0;
  std::shared_ptr<const ExtractBackend> backend_;
};

class HttpServer {
 public:
  explicit HttpServer(LabelingService *service);
  ~HttpServer();

  // Binds and serves on a background thread. Port 0 picks a free port.
  // Returns the bound port.
  int Start(const std::string &host, int port);
  // Blocks until Stop() is called from another thread.
  void Listen(const std::string &host, int port);
  void Stop();

 private:
  LabelingService *service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace entex

#endif  // ENTEX_SERVICE_H_
