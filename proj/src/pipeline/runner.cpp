#include "retriever/pipeline/runner.hpp"

#include <algorithm>

#include "retriever/common/error.hpp"

namespace retriever::pipeline {
namespace {

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS module_versions (module TEXT PRIMARY KEY, version INTEGER NOT NULL) WITHOUT ROWID;
CREATE TABLE IF NOT EXISTS pipeline_claims (
  article_id INTEGER PRIMARY KEY,
  worker TEXT NOT NULL,
  until INTEGER NOT NULL
);
)sql";

void ensure_schema(sql::Database& db) {
  sql::Transaction tx(db);
  db.exec(kSchema);
  tx.commit();
}

}  // namespace

nlohmann::json PipelineTask::to_json() const {
  return {{"article_id", article_id},
          {"from_module", from_module ? nlohmann::json(*from_module) : nlohmann::json(nullptr)}};
}

PipelineTask PipelineTask::from_json(const nlohmann::json& j, int priority) {
  PipelineTask t;
  t.article_id = j.at("article_id").get<store::ArticleId>();
  if (j.contains("from_module") && j["from_module"].is_string()) t.from_module = j["from_module"].get<std::string>();
  t.priority = priority;
  return t;
}

bool hidden_from_features(const nlohmann::json& features) {
  auto ptr = nlohmann::json::json_pointer("/low_quality/data/hidden");
  return features.contains(ptr) && features[ptr].is_boolean() && features[ptr].get<bool>();
}

VersionRegistry::VersionRegistry(const std::string& db_path) : db_(db_path) { ensure_schema(db_); }

std::optional<int> VersionRegistry::get(std::string_view module) {
  std::lock_guard lock(mu_);
  auto& st = db_.prepare("SELECT version FROM module_versions WHERE module = ?");
  st.bind(1, module);
  std::optional<int> out;
  if (st.step()) out = static_cast<int>(st.column_int64(0));
  st.reset();
  return out;
}

void VersionRegistry::set(std::string_view module, int version) {
  std::lock_guard lock(mu_);
  db_.prepare("INSERT INTO module_versions (module, version) VALUES (?, ?) "
              "ON CONFLICT (module) DO UPDATE SET version = excluded.version")
      .bind(1, module)
      .bind(2, version)
      .run();
}

void VersionRegistry::apply(Pipeline& pipeline) {
  for (const auto& name : pipeline.order()) {
    int v = std::max(get(name).value_or(0), pipeline.version(name));
    pipeline.set_version(name, v);
    set(name, v);
  }
}

PipelineRunner::PipelineRunner(std::shared_ptr<Pipeline> pipeline, std::shared_ptr<store::ArticleStore> store,
                               std::shared_ptr<broker::Broker> broker, std::shared_ptr<const Clock> clock,
                               Duration claim_lease)
    : pipeline_(std::move(pipeline)),
      store_(std::move(store)),
      broker_(std::move(broker)),
      clock_(std::move(clock)),
      claim_lease_(claim_lease),
      versions_(store_->path()),
      db_(store_->path()) {
  ensure_schema(db_);
  versions_.apply(*pipeline_);
  broker_->register_queue(kPipelineQueue);
}

bool PipelineRunner::claim(store::ArticleId id, const std::string& worker) {
  std::lock_guard lock(mu_);
  sql::Transaction tx(db_);
  std::int64_t now = to_millis(clock_->now());
  auto& st = db_.prepare("SELECT worker, until FROM pipeline_claims WHERE article_id = ?");
  st.bind(1, id);
  if (st.step()) {
    bool held = st.column_text(0) != worker && st.column_int64(1) > now;
    st.reset();
    if (held) return false;
  }
  db_.prepare("INSERT INTO pipeline_claims (article_id, worker, until) VALUES (?, ?, ?) "
              "ON CONFLICT (article_id) DO UPDATE SET worker = excluded.worker, until = excluded.until")
      .bind(1, id)
      .bind(2, worker)
      .bind(3, now + claim_lease_.count())
      .run();
  tx.commit();
  return true;
}

void PipelineRunner::release(store::ArticleId id, const std::string& worker) {
  std::lock_guard lock(mu_);
  db_.prepare("DELETE FROM pipeline_claims WHERE article_id = ? AND worker = ?").bind(1, id).bind(2, worker).run();
}

TaskOutcome PipelineRunner::process(const PipelineTask& task, const WorkerSlot& worker) {
  if (task.from_module && !pipeline_->has(*task.from_module)) {
    throw Rejected("unknown module: " + *task.from_module);
  }
  if (!claim(task.article_id, worker.id)) return {TaskStatus::claimed_elsewhere, {}};
  struct Release {
    PipelineRunner* self;
    store::ArticleId id;
    const std::string& worker;
    ~Release() { self->release(id, worker); }
  } release_guard{this, task.article_id, worker.id};

  store::Article article = store_->require(task.article_id);
  ProcessResult result = pipeline_->process(article, task.from_module);
  TaskOutcome outcome{TaskStatus::committed, std::move(result.executed)};
  if (outcome.executed.empty()) return outcome;
  if (!store_->set_features(article.id, article.content_version, result.features,
                            hidden_from_features(result.features))) {
    // The extractor changed the text meanwhile and queued a fresh task.
    outcome.status = TaskStatus::content_changed;
  }
  return outcome;
}

std::vector<store::ArticleId> PipelineRunner::stale_articles(std::string_view module) {
  return store_->stale_ids(module, pipeline_->version(module));
}

std::size_t PipelineRunner::reindex(std::string_view module, int priority) {
  auto ids = stale_articles(module);
  for (auto id : ids) {
    broker_->enqueue(kPipelineQueue, PipelineTask{id, std::string(module), priority}.to_json(), priority);
  }
  return ids.size();
}

std::map<std::string, std::size_t> PipelineRunner::stale_counts() {
  std::map<std::string, std::size_t> out;
  for (const auto& name : pipeline_->order()) out[name] = stale_articles(name).size();
  return out;
}

int PipelineRunner::bump(std::string_view module) {
  int next = pipeline_->version(module) + 1;
  versions_.set(module, next);
  pipeline_->set_version(module, next);
  return next;
}

bool PipelineRunner::run_once(const WorkerSlot& worker) {
  auto msg = broker_->dequeue(kPipelineQueue);
  if (!msg) return false;
  try {
    PipelineTask task = PipelineTask::from_json(msg->payload, msg->priority);
    TaskOutcome outcome = process(task, worker);
    if (outcome.status == TaskStatus::claimed_elsewhere) {
      // Another worker holds the article; retry shortly as a fresh message.
      broker_->enqueue(kPipelineQueue, msg->payload, msg->priority, clock_->now() + std::chrono::seconds(1));
    }
    broker_->ack(msg->receipt());
  } catch (const StoreError&) {
    broker_->fail_with_backoff(msg->receipt(), "store unavailable");
  } catch (const std::exception& e) {
    broker_->fail(msg->receipt(), e.what());
  }
  return true;
}

}  // namespace retriever::pipeline
