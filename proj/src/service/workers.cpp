#include "retriever/service/workers.hpp"

#include <condition_variable>

#include "retriever/common/error.hpp"

namespace retriever::service {

using nlohmann::json;

void WorkerGroup::spawn(std::string name, Step step, Duration idle) {
  threads_.emplace_back([this, name = std::move(name), step = std::move(step), idle](std::stop_token stop) {
    std::mutex m;
    std::condition_variable_any cv;
    while (!stop.stop_requested()) {
      bool worked = false;
      try {
        worked = step();
      } catch (const std::exception& e) {
        ++errors_;
        std::lock_guard lock(mu_);
        last_error_ = name + ": " + e.what();
      }
      if (!worked) {
        std::unique_lock lock(m);
        cv.wait_for(lock, stop, idle, [] { return false; });
      }
    }
  });
}

void WorkerGroup::stop() {
  for (auto& t : threads_) t.request_stop();
  for (auto& t : threads_) {
    if (t.joinable()) t.join();
  }
  threads_.clear();
}

std::string WorkerGroup::last_error() const {
  std::lock_guard lock(mu_);
  return last_error_;
}

void CrawlCounters::record(std::string_view outlet_id, download::FetchOutcome outcome) {
  std::lock_guard lock(mu_);
  auto it = counts_.find(outlet_id);
  if (it == counts_.end()) it = counts_.emplace(std::string(outlet_id), std::map<std::string, std::int64_t>{}).first;
  ++it->second[std::string(download::to_string(outcome))];
}

std::int64_t CrawlCounters::count(std::string_view outlet_id, download::FetchOutcome outcome) const {
  std::lock_guard lock(mu_);
  auto it = counts_.find(outlet_id);
  if (it == counts_.end()) return 0;
  auto c = it->second.find(std::string(download::to_string(outcome)));
  return c == it->second.end() ? 0 : c->second;
}

json CrawlCounters::to_json() const {
  std::lock_guard lock(mu_);
  double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count() / 60.0;
  json out = json::object();
  for (const auto& [outlet, counts] : counts_) {
    json o = json::object();
    std::int64_t total = 0;
    for (auto k : {download::FetchOutcome::ok, download::FetchOutcome::dropped, download::FetchOutcome::permanent,
                   download::FetchOutcome::transient}) {
      std::string key(download::to_string(k));
      auto it = counts.find(key);
      std::int64_t n = it == counts.end() ? 0 : it->second;
      o[key] = n;
      total += n;
    }
    o["fetches_per_minute"] = minutes > 0 ? static_cast<double>(total) / minutes : 0.0;
    out[outlet] = std::move(o);
  }
  return out;
}

bool scheduler_step(crawl::Scheduler& scheduler, broker::Broker& broker) {
  bool worked = scheduler.release_due() > 0;
  auto msg = broker.dequeue(crawl::kSchedulerQueue);
  if (!msg) return worked;
  try {
    scheduler.handle_links(msg->payload);
    broker.ack(msg->receipt());
  } catch (const Rejected& e) {
    broker.fail(msg->receipt(), e.what());
  } catch (const std::exception& e) {
    broker.fail_with_backoff(msg->receipt(), e.what());
  }
  return true;
}

DownloadStep::DownloadStep(std::shared_ptr<download::Downloader> downloader, std::shared_ptr<broker::Broker> broker,
                           std::string outlet_id, std::shared_ptr<CrawlCounters> counters)
    : downloader_(std::move(downloader)), broker_(std::move(broker)), queue_(crawl::downloader_queue(outlet_id)),
      counters_(std::move(counters)) {
  state_.outlet_id = std::move(outlet_id);
  state_.crawl_delay = downloader_->config().default_delay;
}

bool DownloadStep::operator()() {
  auto msg = broker_->dequeue(queue_);
  if (!msg) return false;
  download::FetchAttempt attempt;
  try {
    attempt = downloader_->fetch(crawl::UrlTask::from_json(msg->payload), state_);
  } catch (const std::exception& e) {
    broker_->fail(msg->receipt(), std::string("bad task: ") + e.what());
    return true;
  }
  if (counters_) counters_->record(state_.outlet_id, attempt.outcome);
  switch (attempt.outcome) {
    case download::FetchOutcome::ok:
      broker_->enqueue(extract::kExtractorQueue, {{"fetch", attempt.result->to_json()}, {"task", msg->payload}},
                       msg->priority);
      broker_->ack(msg->receipt());
      break;
    case download::FetchOutcome::dropped:
      broker_->ack(msg->receipt());
      break;
    case download::FetchOutcome::permanent:
      broker_->fail(msg->receipt(), attempt.reason);
      break;
    case download::FetchOutcome::transient:
      broker_->fail(msg->receipt(), attempt.reason, downloader_->retry_delay(msg->attempts));
      break;
  }
  return true;
}

bool extract_step(extract::Ingestor& ingestor, broker::Broker& broker) {
  auto msg = broker.dequeue(extract::kExtractorQueue);
  if (!msg) return false;
  try {
    ingestor.handle(msg->payload);
    broker.ack(msg->receipt());
  } catch (const extract::ExtractionError& e) {
    broker.fail(msg->receipt(), e.reason());
  } catch (const Rejected& e) {
    broker.fail(msg->receipt(), e.what());
  } catch (const std::exception& e) {
    broker.fail_with_backoff(msg->receipt(), e.what());
  }
  return true;
}

CrawlService::CrawlService(std::shared_ptr<crawl::Scheduler> scheduler, std::shared_ptr<broker::Broker> broker,
                           std::shared_ptr<store::ArticleStore> store, std::shared_ptr<download::HttpClient> client,
                           std::shared_ptr<pipeline::PipelineRunner> runner, CrawlServiceOptions options,
                           std::shared_ptr<const Clock> clock)
    : scheduler_(std::move(scheduler)), broker_(std::move(broker)), store_(std::move(store)),
      downloader_(std::make_shared<download::Downloader>(std::move(client), std::move(clock), options.downloader)),
      runner_(std::move(runner)), options_(std::move(options)) {
  if (options_.pipeline_workers > 0 && !runner_) throw ConfigError("pipeline workers need a pipeline runner");
  for (const char* q : {crawl::kSchedulerQueue, extract::kExtractorQueue, pipeline::kPipelineQueue}) {
    if (!broker_->has_queue(q)) broker_->register_queue(q);
  }
  auto sched = scheduler_;
  ingestor_ = std::make_shared<extract::Ingestor>(
      store_, broker_, [sched](std::string_view outlet) { return sched->rules(outlet); }, scheduler_->normalization());
}

void CrawlService::start() {
  workers_.spawn("scheduler", [this] { return scheduler_step(*scheduler_, *broker_); }, options_.idle);
  for (const auto& outlet : scheduler_->outlets()) {
    auto step = std::make_shared<DownloadStep>(downloader_, broker_, outlet, counters_);
    workers_.spawn("download." + outlet, [step] { return (*step)(); }, options_.idle);
  }
  for (int i = 0; i < options_.extractors; ++i) {
    workers_.spawn("extractor." + std::to_string(i), [this] { return extract_step(*ingestor_, *broker_); },
                   options_.idle);
  }
  for (int i = 0; i < options_.pipeline_workers; ++i) {
    pipeline::WorkerSlot slot{"pipeline." + std::to_string(i), "cpu"};
    workers_.spawn(slot.id, [this, slot] { return runner_->run_once(slot); }, options_.idle);
  }
}

void CrawlService::stop() { workers_.stop(); }

std::vector<std::string> CrawlService::crawl_queues() {
  std::vector<std::string> out = {crawl::kSchedulerQueue, extract::kExtractorQueue};
  for (const auto& o : scheduler_->outlets()) out.push_back(crawl::downloader_queue(o));
  if (options_.pipeline_workers > 0) out.push_back(pipeline::kPipelineQueue);
  return out;
}

bool CrawlService::quiescent() {
  for (const auto& q : crawl_queues()) {
    auto d = broker_->depth(q);
    if (d.claimed > 0 || (d.ready > 0 && broker_->due(q) > 0)) return false;
  }
  return true;
}

json CrawlService::metrics() {
  auto out = queue_metrics(*broker_, runner_.get());
  out["crawl"] = counters_->to_json();
  out["articles"] = store_->count();
  out["worker_errors"] = workers_.step_errors();
  return out;
}

json queue_metrics(broker::Broker& broker, pipeline::PipelineRunner* runner) {
  json queues = json::object();
  for (const auto& q : broker.queues()) {
    auto d = broker.depth(q);
    queues[q] = {{"ready", d.ready}, {"claimed", d.claimed}, {"errored", d.errored}};
  }
  json out = {{"queues", std::move(queues)}};
  if (runner) {
    json stale = json::object();
    for (const auto& [module, n] : runner->stale_counts()) stale[module] = n;
    out["stale"] = std::move(stale);
  }
  return out;
}

}  // namespace retriever::service
