#pragma once

#include <chrono>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "retriever/common/time.hpp"

namespace retriever::crawl {

enum class UrlKind { article, listing, ignore };

std::string_view to_string(UrlKind kind);
UrlKind url_kind_from_string(std::string_view s);

// Per-outlet crawl configuration, as loaded from a JSON document:
//
//   {"outlet_id": "outletA", "seeds": ["https://a.example/"],
//    "article_patterns": ["/article-\\d+"], "exclude_patterns": [],
//    "ignore_patterns": ["/tag/"], "recrawl_interval_s": 900}
struct CrawlRuleSet {
  std::string outlet_id;
  std::vector<std::string> seeds;
  std::vector<std::string> article_patterns;
  std::vector<std::string> exclude_patterns;
  std::vector<std::string> ignore_patterns;
  Duration recrawl_interval = std::chrono::minutes{15};
  // Optional regex over the URL with named-by-position groups year, month,
  // day, used when the page carries no date markup.
  std::optional<std::string> date_url_pattern;
  // When set, URLs matching an exclude pattern are dropped instead of being
  // traversed as listings.
  bool exclude_means_drop = false;

  static CrawlRuleSet from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

bool valid_outlet_id(std::string_view id);

// A CrawlRuleSet with its regexes compiled. Construction validates the
// rules and throws ConfigError on invalid regexes, ids or seeds.
class CompiledRules {
 public:
  explicit CompiledRules(CrawlRuleSet rules);

  const CrawlRuleSet& rules() const { return rules_; }
  const std::string& outlet_id() const { return rules_.outlet_id; }

  // `url` is expected to be normalized. Pure function of (url, rules).
  UrlKind classify(std::string_view url) const;

  // True when the URL's host is one of the seeds' hosts ("www." ignored).
  bool same_outlet(std::string_view url) const;

  std::optional<std::chrono::sys_days> date_from_url(std::string_view url) const;

 private:
  static bool any_match(const std::vector<std::regex>& patterns, std::string_view url);

  CrawlRuleSet rules_;
  std::vector<std::regex> article_;
  std::vector<std::regex> exclude_;
  std::vector<std::regex> ignore_;
  std::optional<std::regex> date_;
  std::vector<std::string> hosts_;
};

// classify_url as a free function over an already-compiled rule set.
inline UrlKind classify_url(std::string_view url, const CompiledRules& rules) { return rules.classify(url); }

CrawlRuleSet load_rules_file(const std::string& path);

}  // namespace retriever::crawl
