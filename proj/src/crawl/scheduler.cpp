#include "retriever/crawl/scheduler.hpp"

#include <algorithm>
#include <array>

#include "retriever/common/error.hpp"

namespace retriever::crawl {

namespace {

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS visited_urls (url TEXT PRIMARY KEY) WITHOUT ROWID;
CREATE TABLE IF NOT EXISTS outlets (outlet_id TEXT PRIMARY KEY, rules TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS deferred_urls (
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  url TEXT NOT NULL,
  outlet_id TEXT NOT NULL,
  release_at INTEGER NOT NULL,
  priority INTEGER NOT NULL,
  repeat_ms INTEGER
);
CREATE INDEX IF NOT EXISTS deferred_release ON deferred_urls (release_at, id);
)sql";

void ensure_schema(sql::Database& db) {
  sql::Transaction tx(db);
  db.exec(kSchema);
  tx.commit();
}

}  // namespace

int assign_priority(UrlKind /*kind*/, int depth_from_seed) {
  static constexpr std::array<int, 6> kTable{100, 90, 60, 40, 20, 10};
  if (depth_from_seed < 0) throw Rejected("negative crawl depth");
  return kTable[static_cast<std::size_t>(std::min(depth_from_seed, 5))];
}

nlohmann::json UrlTask::to_json() const {
  nlohmann::json j{{"url", url}, {"outlet_id", outlet_id}, {"kind", to_string(kind)},
                   {"priority", priority}, {"depth", depth}};
  j["discovered_from"] = discovered_from ? nlohmann::json(*discovered_from) : nlohmann::json(nullptr);
  return j;
}

UrlTask UrlTask::from_json(const nlohmann::json& j) {
  UrlTask t;
  t.url = j.at("url").get<std::string>();
  t.outlet_id = j.at("outlet_id").get<std::string>();
  t.kind = url_kind_from_string(j.value("kind", std::string("listing")));
  t.priority = j.value("priority", 0);
  t.depth = j.value("depth", 0);
  if (j.contains("discovered_from") && j["discovered_from"].is_string()) {
    t.discovered_from = j["discovered_from"].get<std::string>();
  }
  return t;
}

VisitedSet::VisitedSet(const std::string& db_path) : db_(db_path) { ensure_schema(db_); }

bool VisitedSet::insert(std::string_view url) {
  std::lock_guard lock(mu_);
  db_.prepare("INSERT OR IGNORE INTO visited_urls (url) VALUES (?)").bind(1, url).run();
  return db_.changes() == 1;
}

bool VisitedSet::contains(std::string_view url) {
  std::lock_guard lock(mu_);
  auto& st = db_.prepare("SELECT 1 FROM visited_urls WHERE url = ?");
  st.bind(1, url);
  bool found = st.step();
  st.reset();
  return found;
}

void VisitedSet::erase(std::string_view url) {
  std::lock_guard lock(mu_);
  db_.prepare("DELETE FROM visited_urls WHERE url = ?").bind(1, url).run();
}

std::int64_t VisitedSet::size() {
  std::lock_guard lock(mu_);
  auto& st = db_.prepare("SELECT COUNT(*) FROM visited_urls");
  st.step();
  auto n = st.column_int64(0);
  st.reset();
  return n;
}

Scheduler::Scheduler(const std::string& db_path, std::shared_ptr<broker::Broker> broker,
                     std::shared_ptr<const Clock> clock, UrlNormalization normalization)
    : broker_(std::move(broker)),
      clock_(std::move(clock)),
      normalization_(std::move(normalization)),
      visited_(db_path),
      db_(db_path) {
  broker_->register_queue(kSchedulerQueue);
  std::lock_guard lock(mu_);
  load_outlets_locked();
}

void Scheduler::load_outlets_locked() {
  auto& st = db_.prepare("SELECT rules FROM outlets ORDER BY outlet_id");
  std::vector<std::string> docs;
  while (st.step()) docs.push_back(st.column_text(0));
  for (const auto& doc : docs) {
    auto compiled = std::make_shared<const CompiledRules>(CrawlRuleSet::from_json(nlohmann::json::parse(doc)));
    outlets_[compiled->outlet_id()] = compiled;
  }
}

void Scheduler::add_outlet(const CrawlRuleSet& rules) {
  auto compiled = std::make_shared<const CompiledRules>(rules);
  broker_->register_queue(downloader_queue(compiled->outlet_id()));
  std::lock_guard lock(mu_);
  db_.prepare("INSERT INTO outlets (outlet_id, rules) VALUES (?, ?) ON CONFLICT(outlet_id) DO UPDATE SET rules = excluded.rules")
      .bind(1, compiled->outlet_id())
      .bind(2, compiled->rules().to_json().dump())
      .run();
  outlets_[compiled->outlet_id()] = compiled;
}

std::vector<std::string> Scheduler::outlets() {
  std::lock_guard lock(mu_);
  load_outlets_locked();
  std::vector<std::string> out;
  for (const auto& [id, _] : outlets_) out.push_back(id);
  return out;
}

std::shared_ptr<const CompiledRules> Scheduler::rules(std::string_view outlet_id) {
  std::lock_guard lock(mu_);
  auto it = outlets_.find(outlet_id);
  if (it == outlets_.end()) {
    load_outlets_locked();
    it = outlets_.find(outlet_id);
    if (it == outlets_.end()) throw Rejected("unknown outlet: " + std::string(outlet_id));
  }
  return it->second;
}

UrlKind Scheduler::classify(std::string_view url, std::string_view outlet_id) { return rules(outlet_id)->classify(url); }

SubmitResult Scheduler::submit(const UrlTask& task) {
  auto r = rules(task.outlet_id);
  if (r->classify(task.url) == UrlKind::ignore) return SubmitResult::ignored;
  if (!visited_.insert(task.url)) return SubmitResult::already_visited;
  try {
    broker_->enqueue(downloader_queue(task.outlet_id), task.to_json(), task.priority);
  } catch (...) {
    // Keep the visited set consistent with what actually reached a queue.
    visited_.erase(task.url);
    throw;
  }
  return SubmitResult::enqueued;
}

void Scheduler::schedule_recrawl(std::string_view url, std::string_view outlet_id, Timestamp release_at,
                                 int priority) {
  rules(outlet_id);
  if (release_at <= clock_->now()) throw Rejected("recrawl release time must be in the future");
  std::lock_guard lock(mu_);
  db_.prepare("INSERT INTO deferred_urls (url, outlet_id, release_at, priority) VALUES (?, ?, ?, ?)")
      .bind(1, url)
      .bind(2, outlet_id)
      .bind(3, to_millis(release_at))
      .bind(4, priority)
      .run();
}

std::size_t Scheduler::release_due() {
  const Timestamp now = clock_->now();
  struct Due {
    std::int64_t id;
    DeferredEntry entry;
    std::optional<std::int64_t> repeat_ms;
  };
  std::vector<Due> due;
  {
    std::lock_guard lock(mu_);
    sql::Transaction tx(db_);
    auto& st = db_.prepare(
        "SELECT id, url, outlet_id, release_at, priority, repeat_ms FROM deferred_urls "
        "WHERE release_at <= ? ORDER BY release_at, id");
    st.bind(1, to_millis(now));
    while (st.step()) {
      due.push_back({st.column_int64(0),
                     {st.column_text(1), st.column_text(2), from_millis(st.column_int64(3)),
                      static_cast<int>(st.column_int64(4))},
                     st.column_optional_int64(5)});
    }
    for (const auto& d : due) {
      db_.prepare("DELETE FROM deferred_urls WHERE id = ?").bind(1, d.id).run();
      if (d.repeat_ms) {
        // Next release is one interval after now, never in the past.
        db_.prepare("INSERT INTO deferred_urls (url, outlet_id, release_at, priority, repeat_ms) VALUES (?, ?, ?, ?, ?)")
            .bind(1, d.entry.url)
            .bind(2, d.entry.outlet_id)
            .bind(3, to_millis(now) + *d.repeat_ms)
            .bind(4, d.entry.priority)
            .bind(5, *d.repeat_ms)
            .run();
      }
    }
    tx.commit();
  }
  for (const auto& d : due) {
    UrlTask task{d.entry.url, d.entry.outlet_id, UrlKind::listing, d.entry.priority, std::nullopt, 0};
    broker_->enqueue(downloader_queue(d.entry.outlet_id), task.to_json(), d.entry.priority);
  }
  return due.size();
}

std::vector<DeferredEntry> Scheduler::deferred() {
  std::lock_guard lock(mu_);
  std::vector<DeferredEntry> out;
  auto& st = db_.prepare("SELECT url, outlet_id, release_at, priority FROM deferred_urls ORDER BY release_at, id");
  while (st.step()) {
    out.push_back({st.column_text(0), st.column_text(1), from_millis(st.column_int64(2)),
                   static_cast<int>(st.column_int64(3))});
  }
  return out;
}

std::size_t Scheduler::seed(std::string_view outlet_id) {
  auto r = rules(outlet_id);
  const int priority = assign_priority(UrlKind::listing, 0);
  const Timestamp now = clock_->now();
  for (const auto& url : r->rules().seeds) {
    visited_.insert(url);
    UrlTask task{url, r->outlet_id(), UrlKind::listing, priority, std::nullopt, 0};
    broker_->enqueue(downloader_queue(r->outlet_id()), task.to_json(), priority);
    std::lock_guard lock(mu_);
    db_.prepare("DELETE FROM deferred_urls WHERE url = ? AND outlet_id = ? AND repeat_ms IS NOT NULL")
        .bind(1, url)
        .bind(2, r->outlet_id())
        .run();
    db_.prepare("INSERT INTO deferred_urls (url, outlet_id, release_at, priority, repeat_ms) VALUES (?, ?, ?, ?, ?)")
        .bind(1, url)
        .bind(2, r->outlet_id())
        .bind(3, to_millis(now + r->rules().recrawl_interval))
        .bind(4, priority)
        .bind(5, r->rules().recrawl_interval.count())
        .run();
  }
  return r->rules().seeds.size();
}

SchedulerStats Scheduler::handle_links(const nlohmann::json& payload) {
  SchedulerStats stats;
  const auto outlet = payload.at("outlet_id").get<std::string>();
  auto r = rules(outlet);
  const int depth = payload.value("depth", 0) + 1;
  std::optional<std::string> from;
  if (payload.contains("from") && payload["from"].is_string()) from = payload["from"].get<std::string>();
  for (const auto& link : payload.value("links", nlohmann::json::array())) {
    auto url = try_normalize_url(link.get<std::string>(), std::nullopt, normalization_);
    if (!url || !r->same_outlet(*url)) {
      ++stats.ignored;
      continue;
    }
    UrlKind kind = r->classify(*url);
    if (kind == UrlKind::ignore) {
      ++stats.ignored;
      continue;
    }
    UrlTask task{*url, outlet, kind, assign_priority(kind, depth), from, depth};
    switch (submit(task)) {
      case SubmitResult::enqueued: ++stats.enqueued; break;
      case SubmitResult::already_visited: ++stats.already_visited; break;
      case SubmitResult::ignored: ++stats.ignored; break;
    }
  }
  return stats;
}

}  // namespace retriever::crawl
