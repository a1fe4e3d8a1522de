#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "retriever/common/time.hpp"

namespace retriever::download {

// The robots.txt group that applies to one user agent.
struct RobotsRules {
  struct Rule {
    bool allow = false;
    std::string pattern;
  };

  std::vector<Rule> rules;
  std::optional<Duration> crawl_delay;
  Timestamp fetched_at{};

  // Longest matching pattern wins; Allow wins ties. No rules = allow all.
  bool allows(std::string_view path_and_query) const;

  static RobotsRules allow_all(Timestamp fetched_at = {}) { return RobotsRules{{}, std::nullopt, fetched_at}; }
};

// Picks the group whose User-agent token is contained in `user_agent`
// (case-insensitive, longest token wins), falling back to "*".
RobotsRules parse_robots(std::string_view text, std::string_view user_agent);

// Pattern match with "*" wildcards and a trailing "$" anchor.
bool robots_pattern_matches(std::string_view pattern, std::string_view path);

}  // namespace retriever::download
