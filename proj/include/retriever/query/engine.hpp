#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "retriever/common/clock.hpp"
#include "retriever/nel/kb.hpp"
#include "retriever/query/index.hpp"

namespace retriever::query {

using namespace std::chrono_literals;

struct SeriesPoint {
  std::string bucket;  // first day of the bucket, YYYY-MM-DD
  std::int64_t count = 0;
  bool operator==(const SeriesPoint&) const = default;
};

struct Newsline {
  std::string name;
  std::vector<SeriesPoint> series;
  std::int64_t total = 0;    // dated matches in range plus undated matches
  std::int64_t undated = 0;  // matches without published_at, absent from the series

  nlohmann::json to_json() const;
};

struct ArticleHit {
  store::ArticleId article_id = 0;
  std::string url;
  std::string outlet_id;
  std::string title;
  std::optional<Timestamp> published_at;
  std::vector<std::string> topics;
  bool hidden = false;

  bool operator==(const ArticleHit&) const = default;
  nlohmann::json to_json() const;
  static ArticleHit from_json(const nlohmann::json& j);
};

struct HitPage {
  std::vector<ArticleHit> hits;
  std::int64_t total = 0;
  int page = 1;
  int page_size = 0;
};

struct EntitySummary {
  std::string kb_id;
  std::string label;
  std::int64_t articles = 0;
  bool operator==(const EntitySummary&) const = default;
};

enum class ExportFormat { csv, json };
ExportFormat export_format_from_string(std::string_view s);

inline constexpr int kMaxPageSize = 500;
inline constexpr std::size_t kDefaultExportCap = 100'000;

struct EngineOptions {
  std::size_t export_cap = kDefaultExportCap;
  Duration cache_ttl = 5min;
  std::size_t cache_entries = 1024;
};

// Query operations over a SearchIndex. Thread-safe.
class QueryEngine {
 public:
  QueryEngine(std::shared_ptr<SearchIndex> index, std::shared_ptr<const nel::KnowledgeBase> kb,
              std::shared_ptr<const Clock> clock = system_clock(), EngineOptions options = {});

  Newsline evaluate(const QueryAst& q, const DateRange& range, Bucket bucket, std::string name = {});

  // Ordered by published_at desc, then article id desc; undated matches
  // come last. `page` starts at 1; a page past the end is empty.
  HitPage page_hits(const QueryAst& q, const DateRange& range, int page, int page_size);

  // Streams all matches in page_hits order. CSV columns:
  // url,outlet,title,published_at,topics,hidden (topics joined by "|").
  // Throws QueryError("export_too_large") before writing when over the cap.
  void export_hits(const QueryAst& q, const DateRange& range, ExportFormat format,
                   const std::function<void(std::string_view)>& sink);

  // Case-insensitive prefix match on entity labels and aliases, most
  // mentioned first. Counts come from the last refresh_entity_counts().
  // Prefixes shorter than two characters return nothing.
  std::vector<EntitySummary> entity_lookup(std::string_view prefix, std::size_t limit = 20) const;
  void refresh_entity_counts();

  // Outlet id -> article count, and topic label -> article count.
  std::map<std::string, std::int64_t> outlets() const;
  std::map<std::string, std::int64_t> topic_counts() const;

  SearchIndex& index() { return *index_; }
  std::size_t cache_hits() const;

 private:
  std::vector<ArticleHit> sorted_hits(const QueryAst& q, const DateRange& range);
  std::optional<nlohmann::json> cache_get(const std::string& key);
  void cache_put(const std::string& key, nlohmann::json value);

  std::shared_ptr<SearchIndex> index_;
  std::shared_ptr<const nel::KnowledgeBase> kb_;
  std::shared_ptr<const Clock> clock_;
  EngineOptions options_;

  mutable std::mutex mu_;
  std::map<std::string, std::int64_t> entity_counts_;
  struct CacheEntry {
    Timestamp expires;
    nlohmann::json value;
  };
  std::map<std::string, CacheEntry> cache_;
  std::size_t cache_hits_ = 0;
};

// RFC 4180 field: quoted when it contains a comma, quote, CR or LF.
std::string csv_field(std::string_view s);

}  // namespace retriever::query
