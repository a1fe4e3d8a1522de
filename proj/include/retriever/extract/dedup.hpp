#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "retriever/broker/broker.hpp"
#include "retriever/crawl/rules.hpp"
#include "retriever/crawl/url.hpp"
#include "retriever/extract/extractor.hpp"
#include "retriever/store/article_store.hpp"

namespace retriever::extract {

inline constexpr const char* kExtractorQueue = "extractor.in";
inline constexpr const char* kPipelineQueue = "pipeline.in";

enum class DedupKind { insert_new, update_by_url, merge_by_simhash, keep_existing };
std::string to_string(DedupKind kind);

struct DedupDecision {
  DedupKind kind = DedupKind::insert_new;
  std::optional<store::ArticleId> existing_id;
  std::string reason;  // keep_existing only

  bool operator==(const DedupDecision&) const = default;
};

// URL check first (canonical URL or any URL merged into an article), with
// the body guard "new body longer than half the stored body" in code points;
// then exact simhash equality within the outlet; else a new article.
DedupDecision dedup_decide(const ExtractedPage& page, std::uint64_t simhash, std::string_view url,
                           std::string_view outlet_id, store::ArticleStore& store);

struct PersistResult {
  std::optional<store::ArticleId> article_id;
  bool content_changed = false;
  // No analyzer output stored yet.
  bool unprocessed = false;
};

// Applies a decision. Call inside store.transaction() together with
// dedup_decide.
PersistResult persist(const DedupDecision& decision, const ExtractedPage& page, std::uint64_t simhash,
                      std::string_view url, std::string_view outlet_id, store::ArticleStore& store);

struct IngestResult {
  DedupDecision decision;
  std::optional<store::ArticleId> article_id;
  bool pipeline_enqueued = false;
  std::size_t links_forwarded = 0;
};

// Extractor worker logic: dedup, persist, then dispatch to the pipeline
// and the scheduler.
class Ingestor {
 public:
  using RulesLookup = std::function<std::shared_ptr<const crawl::CompiledRules>(std::string_view outlet_id)>;

  Ingestor(std::shared_ptr<store::ArticleStore> store, std::shared_ptr<broker::Broker> broker, RulesLookup rules,
           crawl::UrlNormalization normalization = {});

  // Dedup and persist under the outlet's critical section, then enqueue
  // {article_id, from_module: null} to the pipeline queue for new or changed
  // content (or content that has not been analyzed yet), and forward links.
  IngestResult ingest(const ExtractedPage& page, std::string_view url, std::string_view outlet_id, int priority,
                      int depth);

  // Handles one extractor queue payload {"fetch": FetchResult, "task": UrlTask}.
  // Listing pages only forward their links. Throws ExtractionError for pages
  // that cannot become articles.
  IngestResult handle(const nlohmann::json& payload);

 private:
  std::size_t forward_links(const std::vector<std::string>& links, std::string_view from, std::string_view outlet_id,
                            int priority, int depth);
  std::mutex& outlet_mutex(std::string_view outlet_id);

  std::shared_ptr<store::ArticleStore> store_;
  std::shared_ptr<broker::Broker> broker_;
  RulesLookup rules_;
  crawl::UrlNormalization normalization_;
  std::mutex mutexes_mu_;
  std::map<std::string, std::unique_ptr<std::mutex>, std::less<>> outlet_mutexes_;
};

}  // namespace retriever::extract
