#include <gtest/gtest.h>

#include <atomic>
#include <map>
#include <set>

#include "mock_site.hpp"
#include "retriever/service/workers.hpp"
#include "test_util.hpp"

namespace retriever::service {
namespace {

using nlohmann::json;
using retriever::testing::MockNewsSite;
using retriever::testing::TempDir;

class MapClient final : public download::HttpClient {
 public:
  std::map<std::string, download::HttpResponse> pages;
  download::HttpResponse get(const std::string& url, const std::string&, std::size_t) override {
    auto it = pages.find(url);
    if (it == pages.end()) return {404, "", "text/plain", std::nullopt};
    return it->second;
  }
};

crawl::CrawlRuleSet site_rules(const std::string& base) {
  crawl::CrawlRuleSet r;
  r.outlet_id = "mock";
  r.seeds = {base + "/"};
  r.article_patterns = {"/article-\\d+$"};
  return r;
}

bool wait_quiescent(CrawlService& service, std::chrono::seconds limit) {
  auto deadline = std::chrono::steady_clock::now() + limit;
  int calm = 0;
  while (std::chrono::steady_clock::now() < deadline) {
    calm = service.quiescent() ? calm + 1 : 0;
    if (calm >= 3) return true;
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  return false;
}

TEST(CrawlLoop, DiscoversMockSiteOncePolitely) {
  MockNewsSite site;
  TempDir dir;
  auto broker = std::make_shared<broker::Broker>(dir.file("broker.db"));
  auto store = std::make_shared<store::ArticleStore>(dir.file("articles.db"));
  auto scheduler = std::make_shared<crawl::Scheduler>(dir.file("crawl.db"), broker);
  scheduler->add_outlet(site_rules(site.base()));

  CrawlServiceOptions opts;
  opts.downloader.default_delay = std::chrono::milliseconds(5);
  opts.idle = std::chrono::milliseconds(5);
  CrawlService service(scheduler, broker, store, std::make_shared<download::HttplibClient>(), nullptr, opts);
  ASSERT_EQ(scheduler->seed("mock"), 1u);
  auto started = std::chrono::steady_clock::now();
  service.start();
  ASSERT_TRUE(wait_quiescent(service, std::chrono::seconds(300)));
  service.stop();
  EXPECT_LT(std::chrono::steady_clock::now() - started, std::chrono::minutes(5));
  EXPECT_EQ(service.step_errors(), 0) << service.last_error();

  auto log = site.log();
  std::map<std::string, int> hits;
  for (const auto& r : log) ++hits[r.path];
  auto expected = site.expected_paths();
  for (const auto& p : expected) EXPECT_EQ(hits[p], 1) << p;
  EXPECT_EQ(log.size(), expected.size());
  for (std::size_t i = 1; i < log.size(); ++i) {
    EXPECT_GE(log[i].at - log[i - 1].at, std::chrono::milliseconds(5)) << log[i].path;
  }

  EXPECT_EQ(store->count(), static_cast<std::size_t>(MockNewsSite::kArticles));
  for (int i = MockNewsSite::kTrackingAliases; i < MockNewsSite::kTrackingAliases + MockNewsSite::kPrintAliases; ++i) {
    auto a = store->find_by_url("mock", site.base() + MockNewsSite::print_path(i));
    ASSERT_TRUE(a) << i;
    EXPECT_EQ(a->url, site.base() + MockNewsSite::article_path(i));
  }
  auto sample = store->find_by_url("mock", site.base() + MockNewsSite::article_path(7));
  ASSERT_TRUE(sample);
  EXPECT_EQ(sample->title, MockNewsSite::title(7));
  // Every article awaits analysis; merged print versions re-enqueue theirs.
  std::set<store::ArticleId> pending;
  std::size_t tasks = 0;
  while (auto msg = broker->dequeue(extract::kPipelineQueue)) {
    pending.insert(msg->payload["article_id"].get<store::ArticleId>());
    ++tasks;
  }
  EXPECT_EQ(pending.size(), static_cast<std::size_t>(MockNewsSite::kArticles));
  EXPECT_EQ(tasks, static_cast<std::size_t>(MockNewsSite::kArticles + MockNewsSite::kPrintAliases));
  EXPECT_EQ(broker->depth(extract::kExtractorQueue).errored, 0);

  auto m = service.metrics();
  EXPECT_EQ(m["crawl"]["mock"]["ok"], static_cast<int>(expected.size()) - 1);  // robots.txt is not a task
  EXPECT_EQ(m["articles"], MockNewsSite::kArticles);
  EXPECT_TRUE(m["queues"].contains(crawl::downloader_queue("mock")));
}

struct StepFixture : ::testing::Test {
  TempDir dir;
  std::shared_ptr<ManualClock> clock = std::make_shared<ManualClock>();
  std::shared_ptr<broker::Broker> broker = std::make_shared<broker::Broker>(dir.file("b.db"), clock);
  std::shared_ptr<MapClient> client = std::make_shared<MapClient>();
  std::shared_ptr<download::Downloader> downloader;
  std::shared_ptr<CrawlCounters> counters = std::make_shared<CrawlCounters>();

  StepFixture() {
    download::DownloaderConfig cfg;
    cfg.default_delay = Duration::zero();
    downloader = std::make_shared<download::Downloader>(client, clock, cfg, [this](Duration d) { clock->advance(d); });
    broker->register_queue(crawl::downloader_queue("a"));
    broker->register_queue(extract::kExtractorQueue);
  }
  void task(const std::string& url) {
    crawl::UrlTask t{url, "a", crawl::UrlKind::article, 7, std::nullopt, 1};
    broker->enqueue(crawl::downloader_queue("a"), t.to_json(), t.priority);
  }
};

TEST_F(StepFixture, DownloadOutcomesRouteMessages) {
  client->pages["https://a.example/ok"] = {200, "<p>x</p>", "text/html", std::nullopt};
  client->pages["https://a.example/img"] = {200, "bin", "image/png", std::nullopt};
  client->pages["https://a.example/busy"] = {503, "", "text/plain", std::nullopt};
  DownloadStep step(downloader, broker, "a", counters);
  EXPECT_FALSE(step());

  task("https://a.example/ok");
  EXPECT_TRUE(step());
  auto out = broker->dequeue(extract::kExtractorQueue);
  ASSERT_TRUE(out);
  EXPECT_EQ(out->priority, 7);
  EXPECT_EQ(out->payload["task"]["url"], "https://a.example/ok");
  EXPECT_EQ(out->payload["fetch"]["body"], "<p>x</p>");

  task("https://a.example/img");
  EXPECT_TRUE(step());
  EXPECT_EQ(broker->depth(crawl::downloader_queue("a")), (broker::QueueDepth{0, 0, 0}));

  task("https://a.example/missing");
  EXPECT_TRUE(step());
  EXPECT_EQ(broker->depth(crawl::downloader_queue("a")).errored, 1);

  task("https://a.example/busy");
  EXPECT_TRUE(step());
  auto d = broker->depth(crawl::downloader_queue("a"));
  EXPECT_EQ(d.ready, 1);
  EXPECT_EQ(broker->due(crawl::downloader_queue("a")), 0);  // waiting out the backoff
  clock->advance(downloader->config().backoff[0]);
  EXPECT_EQ(broker->due(crawl::downloader_queue("a")), 1);

  EXPECT_EQ(counters->count("a", download::FetchOutcome::ok), 1);
  EXPECT_EQ(counters->count("a", download::FetchOutcome::dropped), 1);
  EXPECT_EQ(counters->count("a", download::FetchOutcome::permanent), 1);
  EXPECT_EQ(counters->count("a", download::FetchOutcome::transient), 1);
}

TEST_F(StepFixture, TransientFailuresStopAfterMaxRetries) {
  client->pages["https://a.example/busy"] = {503, "", "text/plain", std::nullopt};
  DownloadStep step(downloader, broker, "a", counters);
  task("https://a.example/busy");
  int deliveries = 0;
  for (int i = 0; i < 10; ++i) {
    if (step()) ++deliveries;
    clock->advance(std::chrono::minutes(1));
  }
  EXPECT_EQ(deliveries, downloader->config().max_retries + 1);
  EXPECT_EQ(broker->depth(crawl::downloader_queue("a")).errored, 1);
}

TEST(ExtractStep, UnusablePagesGoToErrors) {
  TempDir dir;
  auto broker = std::make_shared<broker::Broker>(dir.file("b.db"));
  auto store = std::make_shared<store::ArticleStore>(dir.file("a.db"));
  broker->register_queue(extract::kExtractorQueue);
  auto rules = std::make_shared<const crawl::CompiledRules>(site_rules("https://a.example"));
  extract::Ingestor ingestor(store, broker, [&](std::string_view) { return rules; });
  EXPECT_FALSE(extract_step(ingestor, *broker));

  download::FetchResult empty{"https://a.example/article-1", "https://a.example/article-1", 200, "<html></html>",
                              "text/html", system_clock()->now(), {}};
  crawl::UrlTask t{"https://a.example/article-1", "mock", crawl::UrlKind::article, 1, std::nullopt, 1};
  broker->enqueue(extract::kExtractorQueue, {{"fetch", empty.to_json()}, {"task", t.to_json()}}, 1);
  EXPECT_TRUE(extract_step(ingestor, *broker));
  auto errs = broker->errors(extract::kExtractorQueue);
  ASSERT_EQ(errs.size(), 1u);
  EXPECT_EQ(errs[0].error, "empty_extraction");
  EXPECT_EQ(broker->depth(extract::kExtractorQueue).errored, 1);
}

TEST(Workers, GroupCountsErrorsAndStops) {
  WorkerGroup group;
  std::atomic<int> calls{0};
  group.spawn("flaky", [&]() -> bool {
    if (++calls % 2) throw std::runtime_error("boom");
    return false;
  }, std::chrono::milliseconds(1));
  while (calls < 20) std::this_thread::sleep_for(std::chrono::milliseconds(1));
  group.stop();
  EXPECT_GE(group.step_errors(), 10);
  EXPECT_EQ(group.last_error(), "flaky: boom");
  int after = calls;
  std::this_thread::sleep_for(std::chrono::milliseconds(20));
  EXPECT_EQ(calls, after);
}

TEST(Workers, IdleWaitIsInterruptedByStop) {
  WorkerGroup group;
  group.spawn("idle", [] { return false; }, std::chrono::hours(1));
  auto t0 = std::chrono::steady_clock::now();
  group.stop();
  EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::seconds(5));
}

class Tagger final : public pipeline::Analyzer {
 public:
  json analyze(const store::Article& a, const json&) const override { return {{"length", a.body.size()}}; }
};

TEST(CrawlLoop, PipelineWorkersDrainTheQueue) {
  MockNewsSite site;
  TempDir dir;
  auto broker = std::make_shared<broker::Broker>(dir.file("broker.db"));
  auto store = std::make_shared<store::ArticleStore>(dir.file("articles.db"));
  auto scheduler = std::make_shared<crawl::Scheduler>(dir.file("crawl.db"), broker);
  auto rules = site_rules(site.base());
  rules.article_patterns = {"/article-[0-9]$"};  // ten articles
  scheduler->add_outlet(rules);
  auto p = std::make_shared<pipeline::Pipeline>();
  p->add({"tagger", {}, 1, std::make_shared<Tagger>()});
  auto runner = std::make_shared<pipeline::PipelineRunner>(p, store, broker);

  CrawlServiceOptions opts;
  opts.downloader.default_delay = std::chrono::milliseconds(1);
  opts.idle = std::chrono::milliseconds(5);
  opts.pipeline_workers = 2;
  CrawlService service(scheduler, broker, store, std::make_shared<download::HttplibClient>(), runner, opts);
  scheduler->seed("mock");
  service.start();
  ASSERT_TRUE(wait_quiescent(service, std::chrono::seconds(120)));
  service.stop();
  EXPECT_EQ(store->count(), 10u);
  EXPECT_TRUE(runner->stale_articles("tagger").empty());
  EXPECT_EQ(service.metrics()["stale"]["tagger"], 0);
  for (auto id : store->ids()) EXPECT_GT(store->require(id).features["tagger"]["data"]["length"].get<int>(), 300);
}

TEST(CrawlLoop, PipelineWorkersNeedARunner) {
  TempDir dir;
  auto broker = std::make_shared<broker::Broker>(dir.file("b.db"));
  auto store = std::make_shared<store::ArticleStore>(dir.file("a.db"));
  auto scheduler = std::make_shared<crawl::Scheduler>(dir.file("c.db"), broker);
  CrawlServiceOptions opts;
  opts.pipeline_workers = 1;
  EXPECT_THROW(CrawlService(scheduler, broker, store, std::make_shared<MapClient>(), nullptr, opts), ConfigError);
}

}  // namespace
}  // namespace retriever::service
