#pragma once

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "retriever/broker/broker.hpp"
#include "retriever/crawl/scheduler.hpp"
#include "retriever/download/downloader.hpp"
#include "retriever/extract/dedup.hpp"
#include "retriever/pipeline/runner.hpp"
#include "retriever/store/article_store.hpp"

namespace retriever::service {

using namespace std::chrono_literals;

// Threads that each repeat one step function. A step returns whether it
// found work; an idle step sleeps before the next try. Exceptions escaping
// a step are counted and the loop goes on.
class WorkerGroup {
 public:
  using Step = std::function<bool()>;

  WorkerGroup() = default;
  ~WorkerGroup() { stop(); }
  WorkerGroup(const WorkerGroup&) = delete;
  WorkerGroup& operator=(const WorkerGroup&) = delete;

  void spawn(std::string name, Step step, Duration idle = 50ms);
  // Requests stop and joins every thread; steps in progress finish first.
  void stop();
  std::size_t size() const { return threads_.size(); }
  std::int64_t step_errors() const { return errors_.load(); }
  std::string last_error() const;

 private:
  std::vector<std::jthread> threads_;
  std::atomic<std::int64_t> errors_{0};
  mutable std::mutex mu_;
  std::string last_error_;
};

// Fetch outcomes per outlet, for the metrics endpoint.
class CrawlCounters {
 public:
  CrawlCounters() : started_(std::chrono::steady_clock::now()) {}
  void record(std::string_view outlet_id, download::FetchOutcome outcome);
  std::int64_t count(std::string_view outlet_id, download::FetchOutcome outcome) const;
  // {outlet: {"ok": n, "dropped": n, "permanent": n, "transient": n, "fetches_per_minute": r}}
  nlohmann::json to_json() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::map<std::string, std::int64_t>, std::less<>> counts_;
  std::chrono::steady_clock::time_point started_;
};

// One message from "scheduler.in"; also releases due recrawls.
bool scheduler_step(crawl::Scheduler& scheduler, broker::Broker& broker);

// Serves one outlet's downloader queue. Keeps the outlet's politeness
// state, so exactly one DownloadStep may exist per outlet.
class DownloadStep {
 public:
  DownloadStep(std::shared_ptr<download::Downloader> downloader, std::shared_ptr<broker::Broker> broker,
               std::string outlet_id, std::shared_ptr<CrawlCounters> counters = nullptr);
  // ok -> extractor queue; dropped -> acked; permanent -> error list;
  // transient -> retried with the downloader's backoff until exhausted.
  bool operator()();
  const download::PolitenessState& state() const { return state_; }

 private:
  std::shared_ptr<download::Downloader> downloader_;
  std::shared_ptr<broker::Broker> broker_;
  std::string queue_;
  std::shared_ptr<CrawlCounters> counters_;
  download::PolitenessState state_;
};

// One message from "extractor.in". Pages that cannot become articles go
// to the error list without retry.
bool extract_step(extract::Ingestor& ingestor, broker::Broker& broker);

struct CrawlServiceOptions {
  int extractors = 2;
  int pipeline_workers = 0;  // needs a runner
  Duration idle = 50ms;
  download::DownloaderConfig downloader;
};

// The crawl loop of one process: a scheduler thread, one downloader per
// outlet, extractor threads and optionally pipeline workers.
class CrawlService {
 public:
  CrawlService(std::shared_ptr<crawl::Scheduler> scheduler, std::shared_ptr<broker::Broker> broker,
               std::shared_ptr<store::ArticleStore> store, std::shared_ptr<download::HttpClient> client,
               std::shared_ptr<pipeline::PipelineRunner> runner = nullptr, CrawlServiceOptions options = {},
               std::shared_ptr<const Clock> clock = system_clock());
  ~CrawlService() { stop(); }

  void start();
  void stop();
  // No crawl queue has ready or claimed messages. Deferred recrawls and
  // messages waiting for a retry time do not count as pending.
  bool quiescent();
  std::int64_t step_errors() const { return workers_.step_errors(); }
  std::string last_error() const { return workers_.last_error(); }
  // Queue depths, stale counts and crawl rates.
  nlohmann::json metrics();
  std::shared_ptr<CrawlCounters> counters() const { return counters_; }

 private:
  std::vector<std::string> crawl_queues();

  std::shared_ptr<crawl::Scheduler> scheduler_;
  std::shared_ptr<broker::Broker> broker_;
  std::shared_ptr<store::ArticleStore> store_;
  std::shared_ptr<download::Downloader> downloader_;
  std::shared_ptr<pipeline::PipelineRunner> runner_;
  std::shared_ptr<extract::Ingestor> ingestor_;
  std::shared_ptr<CrawlCounters> counters_ = std::make_shared<CrawlCounters>();
  CrawlServiceOptions options_;
  WorkerGroup workers_;
};

// Queue depths for every known queue plus, when a runner is given, stale
// article counts per module.
nlohmann::json queue_metrics(broker::Broker& broker, pipeline::PipelineRunner* runner);

}  // namespace retriever::service
