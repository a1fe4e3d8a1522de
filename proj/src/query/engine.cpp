#include "retriever/query/engine.hpp"

#include <algorithm>

#include "retriever/analyzers/topics.hpp"
#include "retriever/common/text.hpp"
#include "retriever/common/time.hpp"

namespace retriever::query {

using nlohmann::json;

json Newsline::to_json() const {
  json s = json::array();
  for (const auto& p : series) s.push_back({{"bucket", p.bucket}, {"count", p.count}});
  return {{"name", name}, {"series", std::move(s)}, {"total", total}, {"undated", undated}};
}

json ArticleHit::to_json() const {
  return {{"article_id", article_id},
          {"url", url},
          {"outlet_id", outlet_id},
          {"title", title},
          {"published_at", published_at ? json(format_iso8601(*published_at)) : json(nullptr)},
          {"topics", topics},
          {"hidden", hidden}};
}

ArticleHit ArticleHit::from_json(const json& j) {
  ArticleHit h;
  h.article_id = j.at("article_id").get<store::ArticleId>();
  h.url = j.at("url").get<std::string>();
  h.outlet_id = j.at("outlet_id").get<std::string>();
  h.title = j.at("title").get<std::string>();
  if (!j.at("published_at").is_null()) h.published_at = parse_iso8601(j["published_at"].get<std::string>());
  h.topics = j.at("topics").get<std::vector<std::string>>();
  h.hidden = j.at("hidden").get<bool>();
  return h;
}

ExportFormat export_format_from_string(std::string_view s) {
  if (s == "csv") return ExportFormat::csv;
  if (s == "json") return ExportFormat::json;
  throw QueryError("invalid_format", "export format must be csv or json");
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

QueryEngine::QueryEngine(std::shared_ptr<SearchIndex> index, std::shared_ptr<const nel::KnowledgeBase> kb,
                         std::shared_ptr<const Clock> clock, EngineOptions options)
    : index_(std::move(index)), kb_(std::move(kb)), clock_(std::move(clock)), options_(options) {}

std::optional<json> QueryEngine::cache_get(const std::string& key) {
  std::lock_guard lock(mu_);
  auto it = cache_.find(key);
  if (it == cache_.end()) return std::nullopt;
  if (it->second.expires <= clock_->now()) {
    cache_.erase(it);
    return std::nullopt;
  }
  ++cache_hits_;
  return it->second.value;
}

void QueryEngine::cache_put(const std::string& key, json value) {
  std::lock_guard lock(mu_);
  const auto now = clock_->now();
  if (cache_.size() >= options_.cache_entries) {
    std::erase_if(cache_, [&](const auto& kv) { return kv.second.expires <= now; });
    if (cache_.size() >= options_.cache_entries) cache_.erase(cache_.begin());
  }
  cache_[key] = {now + options_.cache_ttl, std::move(value)};
}

std::size_t QueryEngine::cache_hits() const {
  std::lock_guard lock(mu_);
  return cache_hits_;
}

Newsline QueryEngine::evaluate(const QueryAst& q, const DateRange& range, Bucket bucket, std::string name) {
  // The index revision is part of the key, so a refresh invalidates.
  std::string key = "eval|" + std::to_string(index_->revision()) + "|" + to_json(q).dump() + "|" +
                    to_json(range).dump() + "|" + to_string(bucket);
  Newsline out;
  out.name = std::move(name);
  if (auto cached = cache_get(key)) {
    for (const auto& p : (*cached)["series"]) out.series.push_back({p[0].get<std::string>(), p[1].get<std::int64_t>()});
    out.total = (*cached)["total"].get<std::int64_t>();
    out.undated = (*cached)["undated"].get<std::int64_t>();
    return out;
  }
  std::map<std::chrono::sys_days, std::int64_t> counts;
  for (auto b = bucket_start(range.from, bucket); b <= range.to; b = next_bucket(b, bucket)) counts[b] = 0;
  auto matches = index_->match(q, range);
  index_->visit(matches, [&](const IndexedArticle& a) {
    ++out.total;
    if (!a.published_at) {
      ++out.undated;
      return;
    }
    ++counts[bucket_start(std::chrono::floor<std::chrono::days>(*a.published_at), bucket)];
  });
  json cached_series = json::array();
  for (const auto& [day, n] : counts) {
    out.series.push_back({format_date(day), n});
    cached_series.push_back({format_date(day), n});
  }
  cache_put(key, {{"series", std::move(cached_series)}, {"total", out.total}, {"undated", out.undated}});
  return out;
}

std::vector<ArticleHit> QueryEngine::sorted_hits(const QueryAst& q, const DateRange& range) {
  std::vector<ArticleHit> hits;
  auto matches = index_->match(q, range);
  hits.reserve(matches.count());
  index_->visit(matches, [&](const IndexedArticle& a) {
    hits.push_back({a.id, a.url, a.outlet_id, a.title, a.published_at, a.topics, a.hidden});
  });
  std::sort(hits.begin(), hits.end(), [](const ArticleHit& a, const ArticleHit& b) {
    if (a.published_at.has_value() != b.published_at.has_value()) return a.published_at.has_value();
    if (a.published_at && *a.published_at != *b.published_at) return *a.published_at > *b.published_at;
    return a.article_id > b.article_id;
  });
  return hits;
}

HitPage QueryEngine::page_hits(const QueryAst& q, const DateRange& range, int page, int page_size) {
  if (page < 1) throw QueryError("invalid_page", "page starts at 1");
  if (page_size < 1 || page_size > kMaxPageSize) {
    throw QueryError("invalid_page", "page_size must be between 1 and " + std::to_string(kMaxPageSize));
  }
  auto hits = sorted_hits(q, range);
  HitPage out;
  out.total = static_cast<std::int64_t>(hits.size());
  out.page = page;
  out.page_size = page_size;
  std::size_t begin = static_cast<std::size_t>(page - 1) * static_cast<std::size_t>(page_size);
  for (std::size_t i = begin; i < hits.size() && i < begin + static_cast<std::size_t>(page_size); ++i) {
    out.hits.push_back(std::move(hits[i]));
  }
  return out;
}

void QueryEngine::export_hits(const QueryAst& q, const DateRange& range, ExportFormat format,
                              const std::function<void(std::string_view)>& sink) {
  auto hits = sorted_hits(q, range);
  if (hits.size() > options_.export_cap) {
    throw QueryError("export_too_large", std::to_string(hits.size()) + " rows exceed the export limit of " +
                                             std::to_string(options_.export_cap) + "; narrow the query or range");
  }
  if (format == ExportFormat::json) {
    sink("[");
    for (std::size_t i = 0; i < hits.size(); ++i) {
      std::string row = (i ? "," : "") + hits[i].to_json().dump();
      sink(row);
    }
    sink("]");
    return;
  }
  sink("url,outlet,title,published_at,topics,hidden\r\n");
  for (const auto& h : hits) {
    std::string topics;
    for (const auto& t : h.topics) topics += (topics.empty() ? "" : "|") + t;
    std::string row = csv_field(h.url) + "," + csv_field(h.outlet_id) + "," + csv_field(h.title) + "," +
                      (h.published_at ? format_iso8601(*h.published_at) : "") + "," + csv_field(topics) + "," +
                      (h.hidden ? "true" : "false") + "\r\n";
    sink(row);
  }
}

void QueryEngine::refresh_entity_counts() {
  std::map<std::string, std::int64_t> counts;
  index_->visit_all([&](const IndexedArticle& a) {
    for (const auto& e : a.entities) ++counts[e];
  });
  std::lock_guard lock(mu_);
  entity_counts_ = std::move(counts);
}

std::vector<EntitySummary> QueryEngine::entity_lookup(std::string_view prefix, std::size_t limit) const {
  std::vector<EntitySummary> out;
  std::string key = normalize_key(prefix);
  if (!kb_ || codepoint_length(key) < 2) return out;
  std::lock_guard lock(mu_);
  for (const auto& e : kb_->entities()) {
    bool hit = normalize_key(e.label).starts_with(key);
    for (const auto& a : e.aliases) hit = hit || a.starts_with(key);
    if (!hit) continue;
    auto it = entity_counts_.find(e.kb_id);
    out.push_back({e.kb_id, e.label, it == entity_counts_.end() ? 0 : it->second});
  }
  std::sort(out.begin(), out.end(), [](const EntitySummary& a, const EntitySummary& b) {
    if (a.articles != b.articles) return a.articles > b.articles;
    return a.kb_id < b.kb_id;
  });
  if (out.size() > limit) out.resize(limit);
  return out;
}

std::map<std::string, std::int64_t> QueryEngine::outlets() const {
  std::map<std::string, std::int64_t> out;
  index_->visit_all([&](const IndexedArticle& a) { ++out[a.outlet_id]; });
  return out;
}

std::map<std::string, std::int64_t> QueryEngine::topic_counts() const {
  std::map<std::string, std::int64_t> out;
  for (auto label : analyzers::kTopicLabels) out[std::string(label)] = 0;
  index_->visit_all([&](const IndexedArticle& a) {
    for (const auto& t : a.topics) ++out[t];
  });
  return out;
}

}  // namespace retriever::query
