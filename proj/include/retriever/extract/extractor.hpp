#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "retriever/common/error.hpp"
#include "retriever/common/time.hpp"
#include "retriever/crawl/rules.hpp"
#include "retriever/crawl/url.hpp"
#include "retriever/download/downloader.hpp"

namespace retriever::extract {

struct ExtractedPage {
  std::string title;  // normalized
  std::string body;   // normalized
  std::optional<Timestamp> published_at;
  std::vector<std::string> links;  // normalized, same-outlet, unique
};

// The page cannot become an article. reason() is "empty_extraction" or
// "unparsable_html".
class ExtractionError : public Rejected {
 public:
  explicit ExtractionError(std::string reason)
      : Rejected("extraction failed: " + reason), reason_(std::move(reason)) {}
  const std::string& reason() const { return reason_; }

 private:
  std::string reason_;
};

ExtractedPage extract(const download::FetchResult& result, const crawl::CompiledRules& rules,
                      const crawl::UrlNormalization& normalization = {});

// Overload for raw HTML; `url` is the page's final URL.
ExtractedPage extract_html(std::string_view html, std::string_view url, const crawl::CompiledRules& rules,
                           const crawl::UrlNormalization& normalization = {});

// Links only, for listing pages. Never throws on content.
std::vector<std::string> extract_links_only(std::string_view html, std::string_view url,
                                            const crawl::CompiledRules& rules,
                                            const crawl::UrlNormalization& normalization = {});

}  // namespace retriever::extract
