// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Each check works against an oracle that is independent
// of the code under test (hand-written expectations, brute force, or the
// generator's own records).

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "../mock_site.hpp"
#include "../nel_instances.hpp"
#include "../query_fixtures.hpp"
#include "../synthetic.hpp"
#include "../test_util.hpp"
#include "retriever/analyzers/modules.hpp"
#include "retriever/broker/broker.hpp"
#include "retriever/common/error.hpp"
#include "retriever/common/text.hpp"
#include "retriever/extract/dedup.hpp"
#include "retriever/extract/simhash.hpp"
#include "retriever/nel/solver.hpp"
#include "retriever/pipeline/runner.hpp"
#include "retriever/query/index.hpp"
#include "retriever/service/workers.hpp"

namespace retriever::acceptance {
namespace {

using nlohmann::json;
using retriever::testing::TempDir;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects failures; the first few are kept for the report line.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (ok) return;
    ++failures_;
    if (failures_ <= 3) messages_ += (messages_.empty() ? "" : "; ") + what;
  }
  Outcome done(std::string summary) const {
    if (failures_ == 0) return {true, std::move(summary)};
    return {false, summary + " | " + std::to_string(failures_) + " failure(s): " + messages_};
  }

 private:
  int failures_ = 0;
  std::string messages_;
};

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::size_t alnum_chars(const std::string& s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += std::isalnum(c) ? 1 : 0;
  return n;
}

// ---- dedup --------------------------------------------------------------

Outcome dedup_false_positives() {
  TempDir dir;
  store::ArticleStore store(dir.file("articles.db"));
  testing::TextGenerator gen(4242);
  const int n = 10000;
  auto started = Clock::now();
  std::set<std::string> seen;
  int merges = 0, generated = 0, short_bodies = 0;
  store.transaction([&] {
    while (generated < n) {
      std::string body = gen.sentence(100);
      if (!seen.insert(body).second) continue;  // contents must be distinct
      short_bodies += alnum_chars(body) < 300;
      extract::ExtractedPage page{"Naslov " + std::to_string(generated), body, std::nullopt, {}};
      auto hash = extract::compute_simhash(page.title, page.body);
      std::string url = "https://a.hr/clanak/" + std::to_string(generated);
      auto d = extract::dedup_decide(page, hash, url, "a", store);
      merges += d.kind == extract::DedupKind::merge_by_simhash;
      extract::persist(d, page, hash, url, "a", store);
      ++generated;
    }
  });
  double elapsed = seconds_since(started);
  Check c;
  c.expect(short_bodies == 0, "generated body under 300 alphanumerics");
  c.expect(merges <= 2, std::to_string(merges) + " simhash merges");
  c.expect(store.count() == static_cast<std::size_t>(n - merges), "article count");
  c.expect(elapsed <= 60.0, "took " + std::to_string(elapsed) + "s");
  char buf[160];
  std::snprintf(buf, sizeof buf, "%d distinct articles, %d simhash merges, %.1fs", n, merges, elapsed);
  return c.done(buf);
}

Outcome dedup_decision_table() {
  TempDir dir;
  auto clock = std::make_shared<ManualClock>();
  auto store = std::make_shared<store::ArticleStore>(dir.file("articles.db"), clock);
  auto broker = std::make_shared<broker::Broker>(dir.file("broker.db"), clock);
  extract::Ingestor ingestor(store, broker, [](std::string_view) { return nullptr; });
  testing::TextGenerator gen(17);
  auto page = [](std::string title, std::string body) { return extract::ExtractedPage{std::move(title), std::move(body), {}, {}}; };
  auto decide = [&](const extract::ExtractedPage& p, const std::string& url, const std::string& outlet) {
    return extract::dedup_decide(p, extract::compute_simhash(p.title, p.body), url, outlet, *store);
  };
  using extract::DedupKind;
  Check c;

  // Body guard on the same URL: strictly more than half the stored body.
  ingestor.ingest(page("T", std::string(1000, 'x')), "https://a.hr/1", "a", 90, 1);
  auto d400 = decide(page("T", std::string(400, 'y')), "https://a.hr/1", "a");
  c.expect(d400.kind == DedupKind::keep_existing && d400.reason == "short_body_guard", "400/1000 not kept");
  c.expect(decide(page("T", std::string(500, 'y')), "https://a.hr/1", "a").kind == DedupKind::keep_existing,
           "500/1000 not kept");
  c.expect(decide(page("T", std::string(501, 'y')), "https://a.hr/1", "a").kind == DedupKind::update_by_url,
           "501/1000 not updated");
  std::string cp51, cp50;
  for (int i = 0; i < 51; ++i) cp51 += "č";
  for (int i = 0; i < 50; ++i) cp50 += "č";
  ingestor.ingest(page("C", std::string(100, 'x')), "https://a.hr/cp", "a", 90, 1);
  c.expect(decide(page("C", cp51), "https://a.hr/cp", "a").kind == DedupKind::update_by_url, "51 code points");
  c.expect(decide(page("C", cp50), "https://a.hr/cp", "a").kind == DedupKind::keep_existing, "50 code points");

  // Same outlet, same content, two URLs: one article under the shorter URL.
  std::string body = gen.sentence(120);
  auto longer = ingestor.ingest(page("Tesla", body), "https://a.hr/vijesti/tesla-12345.html", "a", 90, 1);
  auto shorter = ingestor.ingest(page("Tesla", body), "https://a.hr/a/12345", "a", 90, 1);
  c.expect(shorter.decision.kind == DedupKind::merge_by_simhash, "duplicate not merged");
  c.expect(shorter.article_id == longer.article_id, "merge changed id");
  c.expect(store->require(*longer.article_id).url == "https://a.hr/a/12345", "canonical URL is not the shorter one");

  // Other outlet, same content: a separate article.
  auto other = ingestor.ingest(page("Tesla", body), "https://b.hr/1", "b", 90, 1);
  c.expect(other.decision.kind == DedupKind::insert_new && other.article_id != longer.article_id,
           "cross-outlet merge");

  // Whitespace and punctuation variants always share a simhash.
  int variant_merges = 0;
  for (int i = 0; i < 100; ++i) {
    std::string b = gen.sentence(80), v = b;
    std::replace(v.begin(), v.end(), ',', ';');
    std::replace(v.begin(), v.end(), ' ', '\n');
    ingestor.ingest(page("Naslov " + std::to_string(i), normalize_text(b)), "https://a.hr/long-" + std::to_string(i),
                    "a", 90, 1);
    auto r = ingestor.ingest(page("Naslov: " + std::to_string(i) + "!", normalize_text(v)),
                             "https://a.hr/s" + std::to_string(i), "a", 90, 1);
    variant_merges += r.decision.kind == DedupKind::merge_by_simhash;
  }
  c.expect(variant_merges == 100, std::to_string(variant_merges) + "/100 variants merged");
  return c.done("body guard, shorter-URL merge, outlet isolation, 100/100 variant merges");
}

// ---- crawl --------------------------------------------------------------

Outcome crawl_end_to_end() {
  testing::MockNewsSite site;
  TempDir dir;
  auto broker = std::make_shared<broker::Broker>(dir.file("broker.db"));
  auto store = std::make_shared<store::ArticleStore>(dir.file("articles.db"));
  auto scheduler = std::make_shared<crawl::Scheduler>(dir.file("crawl.db"), broker);
  crawl::CrawlRuleSet rules;
  rules.outlet_id = "mock";
  rules.seeds = {site.base() + "/"};
  rules.article_patterns = {"/article-\\d+$"};
  scheduler->add_outlet(rules);

  const auto delay = std::chrono::milliseconds(5);
  service::CrawlServiceOptions opts;
  opts.downloader.default_delay = delay;
  opts.idle = std::chrono::milliseconds(5);
  service::CrawlService service(scheduler, broker, store, std::make_shared<download::HttplibClient>(), nullptr, opts);
  scheduler->seed("mock");
  auto started = Clock::now();
  service.start();
  bool quiet = false;
  for (int calm = 0; seconds_since(started) < 300;) {
    calm = service.quiescent() ? calm + 1 : 0;
    if (calm >= 3) {
      quiet = true;
      break;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  service.stop();
  double elapsed = seconds_since(started);

  Check c;
  c.expect(quiet, "crawl did not settle within 5 minutes");
  c.expect(service.step_errors() == 0, "worker error: " + service.last_error());
  auto log = site.log();
  std::map<std::string, int> hits;
  for (const auto& r : log) ++hits[r.path];
  int repeats = 0, missing = 0;
  for (const auto& p : site.expected_paths()) {
    missing += hits[p] == 0;
    repeats += hits[p] > 1;
  }
  c.expect(missing == 0, std::to_string(missing) + " paths never fetched");
  c.expect(repeats == 0, std::to_string(repeats) + " paths fetched twice");
  c.expect(log.size() == site.expected_paths().size(), "unexpected requests");
  auto min_gap = std::chrono::steady_clock::duration::max();
  for (std::size_t i = 1; i < log.size(); ++i) min_gap = std::min(min_gap, log[i].at - log[i - 1].at);
  c.expect(min_gap >= delay, "arrival gap below the crawl delay");
  c.expect(store->count() == static_cast<std::size_t>(testing::MockNewsSite::kArticles), "article count");
  char buf[200];
  std::snprintf(buf, sizeof buf, "%zu requests, %zu articles, min gap %.2fms, %.1fs", log.size(), store->count(),
                std::chrono::duration<double, std::milli>(min_gap).count(), elapsed);
  return c.done(buf);
}

// ---- broker -------------------------------------------------------------

// Producers and consumers each hold their own Broker on one file. Consumers
// occasionally "crash": they drop a claim without acking and reopen the
// database, so the lease must bring the message back.
Outcome broker_concurrency() {
  TempDir dir;
  const std::string path = dir.file("broker.db");
  const int producers = 4, consumers = 4, per_producer = 10000;
  const int total = producers * per_producer;
  broker::QueueOptions qopts;
  qopts.lease = std::chrono::milliseconds(300);
  qopts.max_attempts = 5;
  broker::Broker(path).register_queue("work", qopts);

  std::mutex mu;
  std::map<std::int64_t, int> acked;  // message id -> successful acks
  std::atomic<int> settled{0}, crashes{0}, rejected_acks{0};
  std::atomic<bool> producers_done{false};
  auto started = Clock::now();

  std::vector<std::thread> threads;
  for (int p = 0; p < producers; ++p) {
    threads.emplace_back([&, p] {
      broker::Broker b(path);
      std::mt19937_64 rng(100 + p);
      for (int i = 0; i < per_producer; ++i) {
        b.enqueue("work", json{{"p", p}, {"i", i}}, static_cast<int>(rng() % 10));
      }
    });
  }
  for (int k = 0; k < consumers; ++k) {
    threads.emplace_back([&, k] {
      std::mt19937_64 rng(200 + k);
      auto b = std::make_unique<broker::Broker>(path);
      while (settled.load() < total) {
        auto m = b->dequeue("work");
        if (!m) {
          std::this_thread::sleep_for(std::chrono::milliseconds(2));
          // Messages that ran out of attempts while leased are settled too.
          if (producers_done) {
            std::int64_t acks = 0;
            {
              std::lock_guard lock(mu);
              acks = static_cast<std::int64_t>(acked.size());
            }
            auto errored = b->depth("work").errored;
            if (acks + errored >= total) settled = total;
          }
          continue;
        }
        if (rng() % 250 == 0) {
          ++crashes;
          b = std::make_unique<broker::Broker>(path);  // restart without acking
          continue;
        }
        try {
          b->ack(m->receipt());
          std::lock_guard lock(mu);
          int& n = acked[m->id];
          if (++n == 1) ++settled;
        } catch (const Rejected&) {
          ++rejected_acks;  // lease expired and the message moved on
        }
      }
    });
  }
  for (int p = 0; p < producers; ++p) threads[static_cast<std::size_t>(p)].join();
  producers_done = true;
  for (std::size_t t = producers; t < threads.size(); ++t) threads[t].join();
  double elapsed = seconds_since(started);

  Check c;
  broker::Broker b(path);
  auto depth = b.depth("work");
  int doubles = 0, lost = 0, errored = 0;
  for (auto& [id, n] : acked) doubles += n > 1;
  for (std::int64_t id = 1; id <= total; ++id) {
    auto m = b.get(id);
    bool failed = m && m->state == broker::MessageState::failed;
    errored += failed;
    lost += !(acked.count(id) || failed);
  }
  c.expect(doubles == 0, std::to_string(doubles) + " messages acked twice");
  c.expect(lost == 0, std::to_string(lost) + " messages neither acked nor errored");
  c.expect(depth.ready == 0 && depth.claimed == 0, "queue not drained");

  // Delivery order: with every message ready before consumers start, the
  // claim sequence must follow (priority desc, id asc) exactly.
  const std::string order_path = dir.file("order.db");
  broker::Broker(order_path).register_queue("work", qopts);
  std::vector<std::thread> fill;
  for (int p = 0; p < producers; ++p) {
    fill.emplace_back([&, p] {
      broker::Broker ob(order_path);
      std::mt19937_64 rng(300 + p);
      for (int i = 0; i < 1000; ++i) ob.enqueue("work", json{{"p", p}}, static_cast<int>(rng() % 10));
    });
  }
  for (auto& t : fill) t.join();
  std::vector<std::pair<std::int64_t, std::int64_t>> claims;  // token, id
  std::map<std::int64_t, int> priority;
  std::vector<std::thread> drain;
  for (int k = 0; k < consumers; ++k) {
    drain.emplace_back([&] {
      broker::Broker ob(order_path);
      while (auto m = ob.dequeue("work")) {
        ob.ack(m->receipt());
        std::lock_guard lock(mu);
        claims.emplace_back(m->claim_token, m->id);
        priority[m->id] = m->priority;
      }
    });
  }
  for (auto& t : drain) t.join();
  std::sort(claims.begin(), claims.end());
  std::vector<std::int64_t> delivered, oracle;
  for (auto [token, id] : claims) delivered.push_back(id);
  for (auto& [id, pr] : priority) oracle.push_back(id);
  std::stable_sort(oracle.begin(), oracle.end(), [&](std::int64_t a, std::int64_t x) { return priority[a] > priority[x]; });
  c.expect(delivered.size() == 4000, "order phase delivered " + std::to_string(delivered.size()));
  c.expect(delivered == oracle, "claim order differs from (priority desc, id asc)");

  char buf[240];
  std::snprintf(buf, sizeof buf,
                "%d messages from %dx%d threads, %d crashes, %d stale acks rejected, %d errored, order check on %zu "
                "claims, %.1fs",
                total, producers, consumers, crashes.load(), rejected_acks.load(), errored, delivered.size(),
                elapsed);
  return c.done(buf);
}

// ---- pipeline -----------------------------------------------------------

class CountingAnalyzer final : public pipeline::Analyzer {
 public:
  CountingAnalyzer(std::string name, std::vector<std::string> deps,
                   std::shared_ptr<std::map<std::pair<store::ArticleId, std::string>, int>> calls)
      : name_(std::move(name)), deps_(std::move(deps)), calls_(std::move(calls)) {}
  json analyze(const store::Article& article, const json& features) const override {
    ++(*calls_)[{article.id, name_}];
    json data{{"module", name_}};
    for (const auto& d : deps_) data["from_" + d] = pipeline::upstream(features, d);
    return data;
  }

 private:
  std::string name_;
  std::vector<std::string> deps_;
  std::shared_ptr<std::map<std::pair<store::ArticleId, std::string>, int>> calls_;
};

Outcome pipeline_minimal_recompute() {
  TempDir dir;
  auto clock = std::make_shared<ManualClock>();
  auto store = std::make_shared<store::ArticleStore>(dir.file("a.db"), clock);
  auto broker = std::make_shared<broker::Broker>(dir.file("b.db"), clock);
  auto calls = std::make_shared<std::map<std::pair<store::ArticleId, std::string>, int>>();
  auto pipe = std::make_shared<pipeline::Pipeline>();
  const std::vector<std::pair<std::string, std::vector<std::string>>> dag = {
      {"core", {}}, {"ner", {"core"}}, {"nel", {"core", "ner"}}, {"low_quality", {"core"}}, {"topics", {"core"}}};
  for (const auto& [name, deps] : dag) pipe->add({name, deps, 1, std::make_shared<CountingAnalyzer>(name, deps, calls)});
  pipeline::PipelineRunner runner(pipe, store, broker, clock);

  // Written out by hand from the DAG above.
  const std::map<std::string, std::set<std::string>> expected = {
      {"core", {"core", "ner", "nel", "low_quality", "topics"}},
      {"ner", {"ner", "nel"}},
      {"nel", {"nel"}},
      {"low_quality", {"low_quality"}},
      {"topics", {"topics"}}};

  std::vector<store::ArticleId> ids;
  for (int i = 0; i < 20; ++i) {
    ids.push_back(store->insert({"o", "https://o.hr/" + std::to_string(i), "T", std::string(20 + i, 'x'), std::nullopt, 0}));
  }
  for (auto id : ids) runner.process({id, std::nullopt, 90});

  Check c;
  for (const auto& [module, want] : expected) {
    runner.bump(module);
    calls->clear();
    std::size_t queued = runner.reindex(module, 50);
    c.expect(queued == ids.size(), module + ": reindex queued " + std::to_string(queued));
    while (runner.run_once({"w1"})) {
    }
    for (auto id : ids) {
      std::set<std::string> ran;
      for (const auto& [name, deps] : dag) {
        int n = calls->count({id, name}) ? calls->at({id, name}) : 0;
        c.expect(n <= 1, module + ": " + name + " ran twice");
        if (n) ran.insert(name);
      }
      c.expect(ran == want, module + ": article " + std::to_string(id) + " ran the wrong modules");
    }
    c.expect(runner.stale_articles(module).empty(), module + ": stale articles left");
  }
  return c.done("5 module bumps x 20 articles, each recomputed exactly its dependents");
}

// ---- NEL ----------------------------------------------------------------

Outcome nel_pass_cap_and_monotone() {
  std::mt19937_64 rng(20240601);
  Check c;
  int max_passes = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    auto inst = testing::random_instance(rng, 8, 5);
    auto r = nel::link(inst.candidates);
    max_passes = std::max(max_passes, r.passes);
    c.expect(r.passes <= nel::kMaxRefinePasses, "passes " + std::to_string(r.passes));
    for (const auto& a : r.assignments) {
      for (std::size_t p = 1; p < a.score_trace.size(); ++p)
        c.expect(a.score_trace[p] >= a.score_trace[p - 1] - 1e-9, "trace decreased in trial " + std::to_string(trial));
    }
  }
  // An instance that needs more passes than allowed stops at the cap.
  auto chain = testing::chain_instance(8);
  auto capped = nel::link(chain.candidates);
  c.expect(capped.passes == nel::kMaxRefinePasses && !capped.converged, "chain instance not capped");
  return c.done("1000 random instances, max passes " + std::to_string(max_passes) + ", chain capped at " +
                std::to_string(capped.passes));
}

Outcome nel_planted_optimum() {
  std::mt19937_64 rng(8080);
  Check c;
  int matched = 0, certified = 0;
  const int trials = 100;
  for (int trial = 0; trial < trials; ++trial) {
    auto inst = testing::planted_instance(rng);
    double best = testing::brute_force_optimum(inst);
    auto r = nel::link(inst.candidates);
    if (std::abs(nel::objective(r.assignments, inst.candidates) - best) < 1e-9) {
      ++matched;
      continue;
    }
    bool local = r.converged && testing::is_local_optimum(inst, testing::to_choice(inst, r.assignments));
    certified += local;
    c.expect(local, "trial " + std::to_string(trial) + " missed without being a local optimum");
  }
  c.expect(matched >= 90, std::to_string(matched) + "/100 matched brute force");
  return c.done(std::to_string(matched) + "/100 at the brute-force optimum, " + std::to_string(certified) +
                " certified local optima");
}

// ---- low quality ---------------------------------------------------------

class CountingClassifier final : public analyzers::QualityClassifier {
 public:
  bool is_low_quality(std::string_view, std::string_view) const override {
    ++calls;
    return false;
  }
  mutable std::atomic<int> calls{0};
};

// Body of exactly `n` tokens: words with a period every tenth token.
std::string body_with_tokens(std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    bool period = (i % 10 == 9) || i + 1 == n;
    if (period && i > 0) {
      s += ".";
      if (i + 1 < n) s += " ";
    } else {
      if (!s.empty() && s.back() != ' ') s += " ";
      s += "riječ";
    }
  }
  return s;
}

Outcome low_quality_gate() {
  auto classifier = std::make_shared<CountingClassifier>();
  analyzers::LowQualityAnalyzer analyzer(classifier);
  analyzers::CoreAnalyzer core(std::make_shared<analyzers::LemmaTable>());
  Check c;
  auto run = [&](std::size_t n) {
    store::Article a;
    a.id = 1;
    a.body = body_with_tokens(n);
    json features{{"core", {{"data", core.analyze(a, json::object())}, {"version", 1}}}};
    c.expect(features["core"]["data"]["tokens"].size() == n, "token count for " + std::to_string(n));
    int before = classifier->calls;
    auto out = analyzer.analyze(a, features);
    return std::pair{out, classifier->calls - before};
  };
  auto [v49, calls49] = run(49);
  c.expect(calls49 == 0 && v49["hidden"] == true && v49["reason"] == "too_short", "49 tokens");
  auto [v51, calls51] = run(51);
  c.expect(calls51 == 1 && v51["hidden"] == false, "51 tokens");
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 500; ++trial) {
    std::size_t n = std::uniform_int_distribution<std::size_t>(1, 200)(rng);
    auto [v, calls] = run(n);
    bool short_doc = n < analyzers::kMinQualityTokens;
    c.expect(calls == (short_doc ? 0 : 1), "classifier calls at " + std::to_string(n));
    c.expect(v["hidden"].get<bool>() == short_doc, "hidden flag at " + std::to_string(n));
  }
  return c.done("49 tokens: 0 classifier calls; 51 tokens: 1 call; 500 random lengths in 1..200");
}

// ---- query ---------------------------------------------------------------

Outcome query_oracle() {
  using namespace testing::queryfx;
  TempDir dir;
  auto corpus = build_synthetic_corpus(dir.file("corpus.db"), 1000, 77);
  auto index = std::make_shared<query::SearchIndex>(corpus.store, corpus.lemmas);
  index->refresh();
  query::QueryEngine eng(index, nullptr);
  auto ids_of = [&](const query::DocSet& set) {
    std::set<store::ArticleId> out;
    index->visit(set, [&](const query::IndexedArticle& a) { out.insert(a.id); });
    return out;
  };
  std::mt19937_64 rng(99);
  const query::Bucket buckets[] = {query::Bucket::day, query::Bucket::week, query::Bucket::month};
  Check c;
  int nonempty = 0;
  for (int trial = 0; trial < 500; ++trial) {
    auto q = random_query(rng, corpus);
    auto r = random_range(rng);
    auto bucket = buckets[trial % 3];
    auto expected = oracle_hits(corpus, q, r);
    nonempty += !expected.empty();
    std::string tag = "trial " + std::to_string(trial);

    auto line = eng.evaluate(q, r, bucket);
    c.expect(line.total == static_cast<std::int64_t>(expected.size()), tag + " total");
    auto series = oracle_series(expected, r, bucket);
    std::vector<std::pair<std::string, std::int64_t>> want_series, got_series;
    for (const auto& [start, count] : series) want_series.emplace_back(format_date(start), count);
    for (const auto& p : line.series) got_series.emplace_back(p.bucket, p.count);
    c.expect(got_series == want_series, tag + " series");

    std::vector<store::ArticleId> want, got;
    for (const auto* d : expected) want.push_back(d->id);
    for (int page = 1;; ++page) {
      auto p = eng.page_hits(q, r, page, query::kMaxPageSize);
      for (const auto& h : p.hits) got.push_back(h.article_id);
      if (p.hits.size() < static_cast<std::size_t>(query::kMaxPageSize)) break;
    }
    c.expect(got == want, tag + " hits");

    // Boolean laws against a second random subtree.
    auto b = random_node(rng, corpus, 3);
    auto with = [&](NodePtr n) {
      QueryAst x = q;
      x.node = std::move(n);
      return ids_of(index->match(x, r));
    };
    auto a_set = with(q.node);
    auto and_set = with(Node::all({q.node, b}));
    auto or_set = with(Node::any({q.node, b}));
    auto b_set = with(b);
    auto frame = ids_of(index->frame(q, r));
    std::set<store::ArticleId> inter, uni, complement;
    std::set_intersection(a_set.begin(), a_set.end(), b_set.begin(), b_set.end(), std::inserter(inter, inter.end()));
    std::set_union(a_set.begin(), a_set.end(), b_set.begin(), b_set.end(), std::inserter(uni, uni.end()));
    std::set_difference(frame.begin(), frame.end(), a_set.begin(), a_set.end(),
                        std::inserter(complement, complement.end()));
    c.expect(and_set == inter, tag + " AND");
    c.expect(or_set == uni, tag + " OR");
    c.expect(with(Node::negate(q.node)) == complement, tag + " NOT");
    c.expect(with(Node::negate(Node::negate(q.node))) == a_set, tag + " double negation");
  }
  c.expect(nonempty >= 200, "too few non-empty queries: " + std::to_string(nonempty));
  return c.done("500 random queries over 1000 articles (" + std::to_string(nonempty) +
                " non-empty): totals, series, pages and Boolean laws agree");
}

Outcome tesla_einstein_scenario() {
  using namespace testing::queryfx;
  TempDir dir;
  auto s = build_scenario(dir.file("scenario.db"), RETRIEVER_DATA, RETRIEVER_FIXTURES);
  auto index = std::make_shared<query::SearchIndex>(s.store, s.lemmas);
  index->refresh();
  query::QueryEngine eng(index, s.kb);
  Check c;
  auto r = query::parse_range(s.spec["range"]);
  auto page = eng.page_hits(query::parse_query(s.spec["query"]), r, 1, query::kMaxPageSize);
  std::set<store::ArticleId> got, want;
  for (const auto& h : page.hits) got.insert(h.article_id);
  for (const auto& key : s.spec["expected_matches"]) want.insert(s.ids.at(key.get<std::string>()));
  c.expect(got == want, "seeded query returned the wrong set");
  auto bucket = query::bucket_from_string(s.spec["bucket"].get<std::string>());
  std::string summary = "seeded set of " + std::to_string(want.size());
  for (const auto& nl : s.spec["newslines"]) {
    auto line = eng.evaluate(query::parse_query(nl["query"]), r, bucket, nl["name"]);
    std::vector<std::pair<std::string, std::int64_t>> series;
    for (const auto& p : line.series) series.emplace_back(p.bucket, p.count);
    std::string name = nl["name"];
    c.expect(series == nl["series"].get<std::vector<std::pair<std::string, std::int64_t>>>(), name + " series");
    c.expect(line.total == nl["total"].get<std::int64_t>(), name + " total");
    c.expect(line.undated == nl["undated"].get<std::int64_t>(), name + " undated");
    summary += ", " + name + " total " + std::to_string(line.total);
  }
  return c.done(summary);
}

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace
}  // namespace retriever::acceptance

int main() {
  using namespace retriever::acceptance;
  const std::vector<Criterion> criteria = {
      {"dedup-false-positives", dedup_false_positives},
      {"dedup-decision-table", dedup_decision_table},
      {"crawl-end-to-end", crawl_end_to_end},
      {"broker-concurrency", broker_concurrency},
      {"pipeline-minimal-recompute", pipeline_minimal_recompute},
      {"nel-pass-cap-monotone", nel_pass_cap_and_monotone},
      {"nel-planted-optimum", nel_planted_optimum},
      {"low-quality-gate", low_quality_gate},
      {"query-oracle", query_oracle},
      {"tesla-einstein-scenario", tesla_einstein_scenario},
  };
  int failed = 0;
  for (const auto& criterion : criteria) {
    Outcome o;
    try {
      o = criterion.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %-28s %s\n", o.pass ? "PASS" : "FAIL", criterion.name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu criteria, %d failed\n", criteria.size(), failed);
  return failed == 0 ? 0 : 1;
}
