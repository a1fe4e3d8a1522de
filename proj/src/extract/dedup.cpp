#include "retriever/extract/dedup.hpp"

#include "retriever/common/text.hpp"
#include "retriever/crawl/scheduler.hpp"
#include "retriever/extract/simhash.hpp"

namespace retriever::extract {

std::string to_string(DedupKind kind) {
  switch (kind) {
    case DedupKind::insert_new: return "InsertNew";
    case DedupKind::update_by_url: return "UpdateByUrl";
    case DedupKind::merge_by_simhash: return "MergeBySimhash";
    case DedupKind::keep_existing: return "KeepExisting";
  }
  return "?";
}

DedupDecision dedup_decide(const ExtractedPage& page, std::uint64_t simhash, std::string_view url,
                           std::string_view outlet_id, store::ArticleStore& store) {
  if (auto existing = store.find_by_url(outlet_id, url)) {
    std::size_t new_len = codepoint_length(page.body);
    std::size_t old_len = codepoint_length(existing->body);
    if (2 * new_len > old_len) return {DedupKind::update_by_url, existing->id, {}};
    return {DedupKind::keep_existing, existing->id, "short_body_guard"};
  }
  if (auto match = store.find_by_simhash(outlet_id, simhash)) {
    return {DedupKind::merge_by_simhash, match->id, {}};
  }
  return {DedupKind::insert_new, std::nullopt, {}};
}

PersistResult persist(const DedupDecision& decision, const ExtractedPage& page, std::uint64_t simhash,
                      std::string_view url, std::string_view outlet_id, store::ArticleStore& store) {
  PersistResult out;
  switch (decision.kind) {
    case DedupKind::insert_new:
      out.article_id = store.insert({std::string(outlet_id), std::string(url), page.title, page.body,
                                     page.published_at, simhash});
      out.content_changed = true;
      out.unprocessed = true;
      break;
    case DedupKind::update_by_url:
    case DedupKind::merge_by_simhash: {
      store::ArticleId id = decision.existing_id.value();
      out.article_id = id;
      out.content_changed = store.update_content(id, page.title, page.body, page.published_at, simhash);
      if (decision.kind == DedupKind::merge_by_simhash) store.merge_url(id, url);
      out.unprocessed = store.require(id).features.empty();
      break;
    }
    case DedupKind::keep_existing:
      out.article_id = decision.existing_id;
      break;
  }
  return out;
}

Ingestor::Ingestor(std::shared_ptr<store::ArticleStore> store, std::shared_ptr<broker::Broker> broker,
                   RulesLookup rules, crawl::UrlNormalization normalization)
    : store_(std::move(store)),
      broker_(std::move(broker)),
      rules_(std::move(rules)),
      normalization_(std::move(normalization)) {
  broker_->register_queue(kPipelineQueue);
  broker_->register_queue(crawl::kSchedulerQueue);
}

std::mutex& Ingestor::outlet_mutex(std::string_view outlet_id) {
  std::lock_guard lock(mutexes_mu_);
  auto it = outlet_mutexes_.find(outlet_id);
  if (it == outlet_mutexes_.end()) {
    it = outlet_mutexes_.emplace(std::string(outlet_id), std::make_unique<std::mutex>()).first;
  }
  return *it->second;
}

IngestResult Ingestor::ingest(const ExtractedPage& page, std::string_view url, std::string_view outlet_id,
                              int priority, int depth) {
  std::uint64_t simhash = compute_simhash(page.title, page.body);
  IngestResult result;
  PersistResult persisted;
  {
    std::lock_guard lock(outlet_mutex(outlet_id));
    store_->transaction([&] {
      result.decision = dedup_decide(page, simhash, url, outlet_id, *store_);
      persisted = persist(result.decision, page, simhash, url, outlet_id, *store_);
    });
  }
  result.article_id = persisted.article_id;
  if (result.decision.kind != DedupKind::keep_existing && (persisted.content_changed || persisted.unprocessed)) {
    broker_->enqueue(kPipelineQueue, {{"article_id", *persisted.article_id}, {"from_module", nullptr}}, priority);
    result.pipeline_enqueued = true;
  }
  result.links_forwarded = forward_links(page.links, url, outlet_id, priority, depth);
  return result;
}

std::size_t Ingestor::forward_links(const std::vector<std::string>& links, std::string_view from,
                                    std::string_view outlet_id, int priority, int depth) {
  if (links.empty()) return 0;
  broker_->enqueue(crawl::kSchedulerQueue,
                   {{"outlet_id", outlet_id}, {"from", from}, {"depth", depth}, {"links", links}}, priority);
  return links.size();
}

IngestResult Ingestor::handle(const nlohmann::json& payload) {
  auto fetch = download::FetchResult::from_json(payload.at("fetch"));
  auto task = crawl::UrlTask::from_json(payload.at("task"));
  auto rules = rules_(task.outlet_id);
  if (!rules) throw Rejected("unknown outlet: " + task.outlet_id);
  if (task.kind != crawl::UrlKind::article) {
    IngestResult result;
    result.decision = {DedupKind::keep_existing, std::nullopt, "listing"};
    auto links = extract_links_only(fetch.body, fetch.url, *rules, normalization_);
    result.links_forwarded = forward_links(links, fetch.url, task.outlet_id, task.priority, task.depth);
    return result;
  }
  ExtractedPage page = extract(fetch, *rules, normalization_);
  return ingest(page, fetch.url, task.outlet_id, task.priority, task.depth);
}

}  // namespace retriever::extract
