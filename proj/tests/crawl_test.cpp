#include <gtest/gtest.h>

#include <algorithm>
#include <atomic>
#include <random>
#include <set>
#include <thread>

#include "retriever/common/error.hpp"
#include "retriever/crawl/rules.hpp"
#include "retriever/crawl/scheduler.hpp"
#include "retriever/crawl/url.hpp"
#include "test_util.hpp"

namespace retriever::crawl {
namespace {

using namespace std::chrono_literals;

TEST(NormalizeUrlTest, ResolvesRelativeAndStripsFragment) {
  EXPECT_EQ(normalize_url("page.html#top", "https://a.example/dir/"), "https://a.example/dir/page.html");
}

TEST(NormalizeUrlTest, CanonicalHostPortAndTracking) {
  EXPECT_EQ(normalize_url("https://A.Example:443/x?utm_source=nl"), "https://a.example/x");
  EXPECT_EQ(normalize_url("https://a.example/x?id=7&utm_campaign=z"), "https://a.example/x?id=7");
  EXPECT_EQ(normalize_url("HTTP://a.example:80"), "http://a.example/");
  EXPECT_EQ(normalize_url("http://a.example:8080/p"), "http://a.example:8080/p");
  EXPECT_EQ(normalize_url("https://a.example/x?fbclid=1&gclid=2"), "https://a.example/x");
  EXPECT_EQ(normalize_url("https://a.example/x?"), "https://a.example/x");
}

TEST(NormalizeUrlTest, TrailingSlashPreservedAsIs) {
  EXPECT_EQ(normalize_url("https://a.example/news/"), "https://a.example/news/");
  EXPECT_EQ(normalize_url("https://a.example/news"), "https://a.example/news");
}

TEST(NormalizeUrlTest, ReferenceResolutionCases) {
  const std::string base = "https://a.example/b/c/d?q";
  EXPECT_EQ(normalize_url("../g", base), "https://a.example/b/g");
  EXPECT_EQ(normalize_url("./g", base), "https://a.example/b/c/g");
  EXPECT_EQ(normalize_url("/g", base), "https://a.example/g");
  EXPECT_EQ(normalize_url("//other.example/g", base), "https://other.example/g");
  EXPECT_EQ(normalize_url("?y", base), "https://a.example/b/c/d?y");
  EXPECT_EQ(normalize_url("#frag", base), "https://a.example/b/c/d?q");
  EXPECT_EQ(normalize_url("../../../../g", base), "https://a.example/g");
  EXPECT_EQ(normalize_url("https://a.example/a/./b/../c"), "https://a.example/a/c");
  EXPECT_EQ(normalize_url("https://a.example/a b"), "https://a.example/a%20b");
}

TEST(NormalizeUrlTest, RejectsUnparsable) {
  EXPECT_THROW(normalize_url("page.html"), Rejected);
  EXPECT_THROW(normalize_url("mailto:x@a.example"), Rejected);
  EXPECT_THROW(normalize_url("javascript:void(0)", "https://a.example/"), Rejected);
  EXPECT_THROW(normalize_url("https://"), Rejected);
  EXPECT_THROW(normalize_url("https://a.example:99999/"), Rejected);
  EXPECT_THROW(normalize_url("   "), Rejected);
  EXPECT_FALSE(try_normalize_url("ftp://a.example/x"));
}

// Independent oracle for tracking-parameter filtering: split the query on
// '&' and keep parameters whose name is not on the blocklist.
std::string filter_oracle(const std::vector<std::pair<std::string, std::string>>& params) {
  std::string out;
  for (const auto& [k, v] : params) {
    bool blocked = k.rfind("utm_", 0) == 0 || k == "fbclid" || k == "gclid";
    if (blocked) continue;
    if (!out.empty()) out += "&";
    out += k + "=" + v;
  }
  return out;
}

TEST(NormalizeUrlTest, ParameterFilterMatchesOracle) {
  std::mt19937 rng(7);
  const std::vector<std::string> names{"id", "page", "utm_source", "utm_medium", "fbclid", "gclid", "q", "utm"};
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::pair<std::string, std::string>> params;
    int n = static_cast<int>(rng() % 5);
    for (int i = 0; i < n; ++i) params.emplace_back(names[rng() % names.size()], std::to_string(rng() % 100));
    std::string raw = "https://a.example/x";
    for (std::size_t i = 0; i < params.size(); ++i) {
      raw += (i == 0 ? "?" : "&") + params[i].first + "=" + params[i].second;
    }
    std::string expected_query = filter_oracle(params);
    std::string expected = "https://a.example/x" + (expected_query.empty() ? "" : "?" + expected_query);
    EXPECT_EQ(normalize_url(raw), expected) << raw;
  }
}

TEST(NormalizeUrlTest, IsIdempotentOnRandomInputs) {
  std::mt19937 rng(99);
  const std::string alphabet = "abcXYZ019/._-?&=#%:@ ~";
  int checked = 0;
  for (int i = 0; i < 3000; ++i) {
    std::string tail;
    int len = static_cast<int>(rng() % 20);
    for (int j = 0; j < len; ++j) tail.push_back(alphabet[rng() % alphabet.size()]);
    std::string raw = (rng() % 2 ? "HTTPS://WWW.A.example" : "http://b.example:80") + std::string("/") + tail;
    auto once = try_normalize_url(raw);
    if (!once) continue;
    ++checked;
    EXPECT_EQ(normalize_url(*once), *once) << raw;
  }
  EXPECT_GT(checked, 2000);
}

CrawlRuleSet outlet_a() {
  CrawlRuleSet r;
  r.outlet_id = "outletA";
  r.seeds = {"https://a.example/"};
  r.article_patterns = {R"(/article-\d+)"};
  r.exclude_patterns = {"/live/"};
  r.ignore_patterns = {"/tag/"};
  return r;
}

TEST(ClassifyUrlTest, Examples) {
  CompiledRules rules(outlet_a());
  EXPECT_EQ(classify_url("https://a.example/sport/article-123.html", rules), UrlKind::article);
  EXPECT_EQ(classify_url("https://a.example/tag/foo", rules), UrlKind::ignore);
  EXPECT_EQ(classify_url("https://a.example/live/article-5", rules), UrlKind::listing);
  EXPECT_EQ(classify_url("https://a.example/sport/", rules), UrlKind::listing);
}

// Every combination of (ignore, exclude, article) matches against the
// documented precedence table.
TEST(ClassifyUrlTest, PrecedenceMatrix) {
  for (bool drop : {false, true}) {
    auto r = outlet_a();
    r.exclude_means_drop = drop;
    CompiledRules rules(r);
    for (int mask = 0; mask < 8; ++mask) {
      bool ign = mask & 1, exc = mask & 2, art = mask & 4;
      std::string url = "https://a.example/";
      if (ign) url += "tag/";
      if (exc) url += "live/";
      url += art ? "article-1" : "page";
      UrlKind expected = ign ? UrlKind::ignore
                         : exc ? (drop ? UrlKind::ignore : UrlKind::listing)
                         : art ? UrlKind::article
                               : UrlKind::listing;
      EXPECT_EQ(rules.classify(url), expected) << url << " drop=" << drop;
    }
  }
}

TEST(ClassifyUrlTest, IsPureOnRandomUrls) {
  CompiledRules rules(outlet_a());
  std::mt19937 rng(3);
  const std::vector<std::string> parts{"tag", "live", "article-12", "sport", "x", "article-", "99"};
  for (int i = 0; i < 1000; ++i) {
    std::string url = "https://a.example";
    for (int j = 0; j < 3; ++j) url += "/" + parts[rng() % parts.size()];
    EXPECT_EQ(rules.classify(url), rules.classify(url));
  }
}

TEST(CrawlRulesTest, ConfigErrorsAtLoadTime) {
  auto r = outlet_a();
  r.article_patterns = {"(unclosed"};
  EXPECT_THROW(CompiledRules{r}, ConfigError);
  r = outlet_a();
  r.seeds = {"https://a.example/tag/home"};
  EXPECT_THROW(CompiledRules{r}, ConfigError);
  r = outlet_a();
  r.outlet_id = "has space";
  EXPECT_THROW(CompiledRules{r}, ConfigError);
  EXPECT_THROW(CrawlRuleSet::from_json(nlohmann::json{{"seeds", nlohmann::json::array()}}), ConfigError);
}

TEST(CrawlRulesTest, JsonRoundTripAndDateFromUrl) {
  auto r = outlet_a();
  r.date_url_pattern = R"(/(\d{4})/(\d{2})/(\d{2})/)";
  auto back = CrawlRuleSet::from_json(r.to_json());
  EXPECT_EQ(back.to_json(), r.to_json());
  CompiledRules rules(back);
  auto d = rules.date_from_url("https://a.example/2020/05/01/article-1");
  ASSERT_TRUE(d);
  EXPECT_EQ(format_date(*d), "2020-05-01");
  EXPECT_FALSE(rules.date_from_url("https://a.example/2020/13/01/article-1"));
  EXPECT_TRUE(rules.same_outlet("https://www.a.example/x"));
  EXPECT_FALSE(rules.same_outlet("https://b.example/x"));
}

TEST(AssignPriorityTest, TableAndMonotonicity) {
  EXPECT_EQ(assign_priority(UrlKind::listing, 0), 100);
  EXPECT_EQ(assign_priority(UrlKind::article, 1), 90);
  EXPECT_EQ(assign_priority(UrlKind::article, 2), 60);
  EXPECT_EQ(assign_priority(UrlKind::article, 3), 40);
  EXPECT_EQ(assign_priority(UrlKind::article, 4), 20);
  EXPECT_EQ(assign_priority(UrlKind::article, 5), 10);
  EXPECT_EQ(assign_priority(UrlKind::article, 500), 10);
  for (int a = 0; a < 20; ++a) {
    for (int b = a + 1; b < 20; ++b) {
      EXPECT_GE(assign_priority(UrlKind::article, a), assign_priority(UrlKind::article, b));
    }
  }
  EXPECT_THROW(assign_priority(UrlKind::article, -1), Rejected);
}

class SchedulerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    clock_ = std::make_shared<ManualClock>();
    broker_ = std::make_shared<broker::Broker>(db(), clock_);
    scheduler_ = std::make_unique<Scheduler>(db(), broker_, clock_);
    scheduler_->add_outlet(outlet_a());
  }
  std::string db() const { return dir_.file("crawl.db"); }

  UrlTask task(const std::string& url, int priority = 90) {
    return UrlTask{url, "outletA", UrlKind::article, priority, std::nullopt, 1};
  }

  retriever::testing::TempDir dir_;
  std::shared_ptr<ManualClock> clock_;
  std::shared_ptr<broker::Broker> broker_;
  std::unique_ptr<Scheduler> scheduler_;
};

TEST_F(SchedulerTest, SubmitFreshThenDuplicate) {
  EXPECT_EQ(scheduler_->submit(task("https://a.example/article-1")), SubmitResult::enqueued);
  EXPECT_EQ(scheduler_->visited().size(), 1);
  EXPECT_EQ(scheduler_->submit(task("https://a.example/article-1")), SubmitResult::already_visited);
  EXPECT_EQ(broker_->depth("downloader.outletA").ready, 1);
  auto m = broker_->dequeue("downloader.outletA");
  ASSERT_TRUE(m);
  EXPECT_EQ(m->priority, 90);
  EXPECT_EQ(UrlTask::from_json(m->payload).url, "https://a.example/article-1");
}

TEST_F(SchedulerTest, IgnoredAndUnknownOutlet) {
  EXPECT_EQ(scheduler_->submit(task("https://a.example/tag/x")), SubmitResult::ignored);
  EXPECT_EQ(scheduler_->visited().size(), 0);
  auto t = task("https://a.example/article-2");
  t.outlet_id = "nope";
  EXPECT_THROW(scheduler_->submit(t), Rejected);
}

TEST_F(SchedulerTest, OutletsArePersisted) {
  Scheduler other(db(), broker_, clock_);
  EXPECT_EQ(other.outlets(), std::vector<std::string>{"outletA"});
  EXPECT_EQ(other.classify("https://a.example/article-3", "outletA"), UrlKind::article);
}

TEST_F(SchedulerTest, ConcurrentSubmitEnqueuesEachUrlOnce) {
  constexpr int kUrls = 10000;
  constexpr int kWorkers = 4;
  std::atomic<int> enqueued{0};
  {
    std::vector<std::jthread> workers;
    for (int w = 0; w < kWorkers; ++w) {
      workers.emplace_back([&, w] {
        auto b = std::make_shared<broker::Broker>(db(), clock_);
        Scheduler s(db(), b, clock_);
        // Every worker walks all URLs from a different starting point, so
        // each URL is contended by all four workers.
        for (int i = 0; i < kUrls; ++i) {
          int n = (i + w * kUrls / kWorkers) % kUrls;
          auto r = s.submit(UrlTask{"https://a.example/article-" + std::to_string(n), "outletA", UrlKind::article, 90,
                                    std::nullopt, 1});
          if (r == SubmitResult::enqueued) ++enqueued;
        }
      });
    }
  }
  EXPECT_EQ(enqueued.load(), kUrls);
  EXPECT_EQ(broker_->depth("downloader.outletA").ready, kUrls);
  EXPECT_EQ(scheduler_->visited().size(), kUrls);
}

TEST_F(SchedulerTest, SeedAndRecrawlAfterInterval) {
  EXPECT_EQ(scheduler_->seed("outletA"), 1u);
  auto first = broker_->dequeue("downloader.outletA");
  ASSERT_TRUE(first);
  EXPECT_EQ(first->priority, 100);
  broker_->ack(first->receipt());
  EXPECT_EQ(scheduler_->release_due(), 0u);
  clock_->advance(15min - 1ms);
  EXPECT_EQ(scheduler_->release_due(), 0u);
  clock_->advance(1ms);
  EXPECT_EQ(scheduler_->release_due(), 1u);
  auto again = broker_->dequeue("downloader.outletA");
  ASSERT_TRUE(again);
  EXPECT_EQ(UrlTask::from_json(again->payload).url, "https://a.example/");
  // The homepage keeps recurring.
  ASSERT_EQ(scheduler_->deferred().size(), 1u);
  EXPECT_EQ(scheduler_->deferred()[0].release_at, clock_->now() + 15min);
}

TEST_F(SchedulerTest, DeferredEntriesReleaseInTimeOrder) {
  auto t0 = clock_->now();
  scheduler_->schedule_recrawl("https://a.example/b", "outletA", t0 + 2min, 5);
  scheduler_->schedule_recrawl("https://a.example/a", "outletA", t0 + 1min, 5);
  EXPECT_THROW(scheduler_->schedule_recrawl("https://a.example/c", "outletA", t0, 5), Rejected);
  clock_->advance(3min);
  EXPECT_EQ(scheduler_->release_due(), 2u);
  auto first = broker_->dequeue("downloader.outletA");
  auto second = broker_->dequeue("downloader.outletA");
  EXPECT_EQ(first->payload["url"], "https://a.example/a");
  EXPECT_EQ(second->payload["url"], "https://a.example/b");
}

TEST_F(SchedulerTest, DrainReleasesExactlyDueEntries) {
  std::mt19937 rng(11);
  auto t0 = clock_->now();
  std::vector<Timestamp> releases;
  for (int i = 0; i < 200; ++i) {
    auto at = t0 + Duration{1 + static_cast<std::int64_t>(rng() % 100000)};
    releases.push_back(at);
    scheduler_->schedule_recrawl("https://a.example/p" + std::to_string(i), "outletA", at, 1);
  }
  auto cut = t0 + 50000ms;
  clock_->set(cut);
  auto expected = std::count_if(releases.begin(), releases.end(), [&](Timestamp t) { return t <= cut; });
  EXPECT_EQ(scheduler_->release_due(), static_cast<std::size_t>(expected));
  for (const auto& e : scheduler_->deferred()) EXPECT_GT(e.release_at, cut);
  EXPECT_EQ(scheduler_->deferred().size(), releases.size() - static_cast<std::size_t>(expected));
}

TEST_F(SchedulerTest, HandleLinksClassifiesAndPrioritizesByDepth) {
  nlohmann::json payload{{"outlet_id", "outletA"},
                         {"from", "https://a.example/"},
                         {"depth", 0},
                         {"links",
                          {"https://a.example/article-1", "https://a.example/article-1?utm_source=x",
                           "https://a.example/tag/t", "https://elsewhere.example/article-9",
                           "https://a.example/section"}}};
  auto stats = scheduler_->handle_links(payload);
  EXPECT_EQ(stats.enqueued, 2);
  EXPECT_EQ(stats.already_visited, 1);
  EXPECT_EQ(stats.ignored, 2);
  auto m = broker_->dequeue("downloader.outletA");
  auto t = UrlTask::from_json(m->payload);
  EXPECT_EQ(t.depth, 1);
  EXPECT_EQ(t.priority, 90);
  EXPECT_EQ(t.discovered_from, "https://a.example/");
}

}  // namespace
}  // namespace retriever::crawl
