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
#include "retriever/crawl/rules.hpp"
#include "retriever/crawl/url.hpp"

namespace retriever::crawl {

inline constexpr const char* kSchedulerQueue = "scheduler.in";
inline std::string downloader_queue(std::string_view outlet_id) { return "downloader." + std::string(outlet_id); }

struct UrlTask {
  std::string url;
  std::string outlet_id;
  UrlKind kind = UrlKind::listing;
  int priority = 0;
  std::optional<std::string> discovered_from;
  int depth = 0;

  nlohmann::json to_json() const;
  static UrlTask from_json(const nlohmann::json& j);
};

struct DeferredEntry {
  std::string url;
  std::string outlet_id;
  Timestamp release_at;
  int priority = 0;
};

enum class SubmitResult { enqueued, already_visited, ignored };

// Depth 0 (homepages) is the most urgent; the table floors at depth 5.
int assign_priority(UrlKind kind, int depth_from_seed);

// Visited-URL set: a single-column keyed table with atomic check-and-insert.
class VisitedSet {
 public:
  explicit VisitedSet(const std::string& db_path);

  // True if the URL was newly inserted.
  bool insert(std::string_view url);
  bool contains(std::string_view url);
  void erase(std::string_view url);
  std::int64_t size();

 private:
  std::mutex mu_;
  sql::Database db_;
};

struct SchedulerStats {
  std::int64_t enqueued = 0;
  std::int64_t already_visited = 0;
  std::int64_t ignored = 0;
};

// Classifies discovered URLs, deduplicates them against the visited set and
// routes them to per-outlet downloader queues. Rule sets are persisted so
// that several scheduler processes share one configuration.
class Scheduler {
 public:
  Scheduler(const std::string& db_path, std::shared_ptr<broker::Broker> broker,
            std::shared_ptr<const Clock> clock = system_clock(), UrlNormalization normalization = {});

  // Validates, persists and activates an outlet; registers its downloader
  // queue. Replaces an existing outlet with the same id.
  void add_outlet(const CrawlRuleSet& rules);
  std::vector<std::string> outlets();
  std::shared_ptr<const CompiledRules> rules(std::string_view outlet_id);

  UrlKind classify(std::string_view url, std::string_view outlet_id);

  SubmitResult submit(const UrlTask& task);

  // Persists a deferred delivery; released entries bypass the visited set.
  void schedule_recrawl(std::string_view url, std::string_view outlet_id, Timestamp release_at, int priority);

  // Sends every deferred entry with release_at <= now to its downloader
  // queue, oldest first. Seed entries reschedule themselves one recrawl
  // interval later. Returns the number released.
  std::size_t release_due();
  std::vector<DeferredEntry> deferred();

  // Enqueues the outlet's homepages now and schedules their recrawl.
  std::size_t seed(std::string_view outlet_id);

  // Handles one "scheduler.in" payload:
  //   {"outlet_id": ..., "from": url, "depth": n, "links": [url, ...]}
  // where depth is the depth of the page the links were found on.
  SchedulerStats handle_links(const nlohmann::json& payload);

  VisitedSet& visited() { return visited_; }
  const UrlNormalization& normalization() const { return normalization_; }

 private:
  void load_outlets_locked();

  std::shared_ptr<broker::Broker> broker_;
  std::shared_ptr<const Clock> clock_;
  UrlNormalization normalization_;
  VisitedSet visited_;
  std::mutex mu_;
  sql::Database db_;
  std::map<std::string, std::shared_ptr<const CompiledRules>, std::less<>> outlets_;
};

}  // namespace retriever::crawl
