#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "retriever/broker/broker.hpp"
#include "retriever/common/clock.hpp"
#include "retriever/common/sqlite.hpp"
#include "retriever/pipeline/pipeline.hpp"
#include "retriever/store/article_store.hpp"

namespace retriever::pipeline {

inline constexpr const char* kPipelineQueue = "pipeline.in";

struct PipelineTask {
  store::ArticleId article_id = 0;
  std::optional<std::string> from_module;
  int priority = 0;

  nlohmann::json to_json() const;
  // Payload form {"article_id": n, "from_module": name|null}.
  static PipelineTask from_json(const nlohmann::json& j, int priority = 0);
};

// Persisted module versions, so that a version bump survives restarts and is
// shared by every worker on the same database.
class VersionRegistry {
 public:
  explicit VersionRegistry(const std::string& db_path);

  std::optional<int> get(std::string_view module);
  void set(std::string_view module, int version);
  // Sets every module to the larger of its configured and persisted
  // version, and persists the result.
  void apply(Pipeline& pipeline);

 private:
  std::mutex mu_;
  sql::Database db_;
};

enum class TaskStatus { committed, content_changed, claimed_elsewhere };

struct TaskOutcome {
  TaskStatus status = TaskStatus::committed;
  std::vector<std::string> executed;
};

struct WorkerSlot {
  std::string id;
  // Placeholder for the accelerator a worker is pinned to; all analyzers
  // here run on the CPU.
  std::string device = "cpu";
};

class PipelineRunner {
 public:
  PipelineRunner(std::shared_ptr<Pipeline> pipeline, std::shared_ptr<store::ArticleStore> store,
                 std::shared_ptr<broker::Broker> broker, std::shared_ptr<const Clock> clock = system_clock(),
                 Duration claim_lease = std::chrono::minutes(5));

  // Runs the task's run set under a per-article claim and commits the whole
  // features document at once. An analyzer exception propagates and leaves
  // the stored features untouched.
  TaskOutcome process(const PipelineTask& task, const WorkerSlot& worker = {"local"});

  std::vector<store::ArticleId> stale_articles(std::string_view module);
  // One task per stale article, starting at `module`.
  std::size_t reindex(std::string_view module, int priority);
  std::map<std::string, std::size_t> stale_counts();
  // Increments and persists the module's version.
  int bump(std::string_view module);

  // Takes one task from the pipeline queue. Failures go to the queue's
  // error list without retry. Returns false when the queue was empty.
  bool run_once(const WorkerSlot& worker);

  Pipeline& pipeline() { return *pipeline_; }

 private:
  bool claim(store::ArticleId id, const std::string& worker);
  void release(store::ArticleId id, const std::string& worker);

  std::shared_ptr<Pipeline> pipeline_;
  std::shared_ptr<store::ArticleStore> store_;
  std::shared_ptr<broker::Broker> broker_;
  std::shared_ptr<const Clock> clock_;
  Duration claim_lease_;
  VersionRegistry versions_;
  std::mutex mu_;
  sql::Database db_;
};

// Hidden flag derived from the low_quality record, false when absent.
bool hidden_from_features(const nlohmann::json& features);

}  // namespace retriever::pipeline
