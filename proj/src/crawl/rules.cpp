#include "retriever/crawl/rules.hpp"

#include <algorithm>
#include <fstream>

#include "retriever/common/error.hpp"
#include "retriever/crawl/url.hpp"

namespace retriever::crawl {

std::string_view to_string(UrlKind kind) {
  switch (kind) {
    case UrlKind::article: return "article";
    case UrlKind::listing: return "listing";
    case UrlKind::ignore: return "ignore";
  }
  return "ignore";
}

UrlKind url_kind_from_string(std::string_view s) {
  if (s == "article") return UrlKind::article;
  if (s == "listing") return UrlKind::listing;
  if (s == "ignore") return UrlKind::ignore;
  throw Rejected("unknown url kind: " + std::string(s));
}

bool valid_outlet_id(std::string_view id) {
  return !id.empty() && std::all_of(id.begin(), id.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
  });
}

CrawlRuleSet CrawlRuleSet::from_json(const nlohmann::json& j) {
  try {
    CrawlRuleSet r;
    r.outlet_id = j.at("outlet_id").get<std::string>();
    r.seeds = j.value("seeds", std::vector<std::string>{});
    r.article_patterns = j.value("article_patterns", std::vector<std::string>{});
    r.exclude_patterns = j.value("exclude_patterns", std::vector<std::string>{});
    r.ignore_patterns = j.value("ignore_patterns", std::vector<std::string>{});
    if (j.contains("recrawl_interval_s")) {
      r.recrawl_interval = std::chrono::duration_cast<Duration>(
          std::chrono::duration<double>(j.at("recrawl_interval_s").get<double>()));
    }
    if (j.contains("date_url_pattern") && !j.at("date_url_pattern").is_null()) {
      r.date_url_pattern = j.at("date_url_pattern").get<std::string>();
    }
    r.exclude_means_drop = j.value("exclude_means_drop", false);
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid crawl rules: ") + e.what());
  }
}

nlohmann::json CrawlRuleSet::to_json() const {
  nlohmann::json j{{"outlet_id", outlet_id},
                   {"seeds", seeds},
                   {"article_patterns", article_patterns},
                   {"exclude_patterns", exclude_patterns},
                   {"ignore_patterns", ignore_patterns},
                   {"recrawl_interval_s", std::chrono::duration<double>(recrawl_interval).count()},
                   {"exclude_means_drop", exclude_means_drop}};
  if (date_url_pattern) j["date_url_pattern"] = *date_url_pattern;
  return j;
}

namespace {

std::vector<std::regex> compile_all(const std::vector<std::string>& patterns, std::string_view what) {
  std::vector<std::regex> out;
  for (const auto& p : patterns) {
    try {
      out.emplace_back(p, std::regex::ECMAScript | std::regex::optimize);
    } catch (const std::regex_error& e) {
      throw ConfigError("invalid " + std::string(what) + " pattern '" + p + "': " + e.what());
    }
  }
  return out;
}

}  // namespace

CompiledRules::CompiledRules(CrawlRuleSet rules) : rules_(std::move(rules)) {
  if (!valid_outlet_id(rules_.outlet_id)) throw ConfigError("invalid outlet id: '" + rules_.outlet_id + "'");
  article_ = compile_all(rules_.article_patterns, "article");
  exclude_ = compile_all(rules_.exclude_patterns, "exclude");
  ignore_ = compile_all(rules_.ignore_patterns, "ignore");
  if (rules_.date_url_pattern) {
    try {
      date_ = std::regex(*rules_.date_url_pattern, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
      throw ConfigError("invalid date_url_pattern: " + std::string(e.what()));
    }
  }
  if (rules_.recrawl_interval <= Duration::zero()) throw ConfigError("recrawl interval must be positive");
  for (auto& seed : rules_.seeds) {
    auto normalized = try_normalize_url(seed);
    if (!normalized) throw ConfigError("invalid seed URL: " + seed);
    seed = *normalized;
    if (any_match(ignore_, seed)) throw ConfigError("seed matches an ignore pattern: " + seed);
    auto host = site_host(seed);
    if (std::find(hosts_.begin(), hosts_.end(), host) == hosts_.end()) hosts_.push_back(host);
  }
}

bool CompiledRules::any_match(const std::vector<std::regex>& patterns, std::string_view url) {
  return std::any_of(patterns.begin(), patterns.end(),
                     [&](const std::regex& re) { return std::regex_search(url.begin(), url.end(), re); });
}

UrlKind CompiledRules::classify(std::string_view url) const {
  if (any_match(ignore_, url)) return UrlKind::ignore;
  bool excluded = any_match(exclude_, url);
  if (excluded && rules_.exclude_means_drop) return UrlKind::ignore;
  if (!excluded && any_match(article_, url)) return UrlKind::article;
  return UrlKind::listing;
}

bool CompiledRules::same_outlet(std::string_view url) const {
  auto host = site_host(url);
  return !host.empty() && std::find(hosts_.begin(), hosts_.end(), host) != hosts_.end();
}

std::optional<std::chrono::sys_days> CompiledRules::date_from_url(std::string_view url) const {
  if (!date_) return std::nullopt;
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_search(url.begin(), url.end(), m, *date_) || m.size() < 4) return std::nullopt;
  try {
    int y = std::stoi(m[1].str());
    unsigned mo = static_cast<unsigned>(std::stoi(m[2].str()));
    unsigned d = static_cast<unsigned>(std::stoi(m[3].str()));
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{mo}, std::chrono::day{d}};
    if (!ymd.ok()) return std::nullopt;
    return std::chrono::sys_days{ymd};
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

CrawlRuleSet load_rules_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open rules file " + path);
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw ConfigError("rules file is not valid JSON: " + path);
  return CrawlRuleSet::from_json(j);
}

}  // namespace retriever::crawl
