#include "retriever/download/robots.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>

namespace retriever::download {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

struct Group {
  std::vector<std::string> agents;
  RobotsRules rules;
};

}  // namespace

bool robots_pattern_matches(std::string_view pattern, std::string_view path) {
  bool anchored = !pattern.empty() && pattern.back() == '$';
  if (anchored) pattern.remove_suffix(1);
  // Greedy wildcard matching with backtracking over the last '*'.
  std::size_t p = 0, s = 0, star = std::string_view::npos, mark = 0;
  while (s < path.size()) {
    if (p < pattern.size() && pattern[p] == '*') {
      star = p++;
      mark = s;
    } else if (p < pattern.size() && pattern[p] == path[s]) {
      ++p;
      ++s;
    } else if (p == pattern.size() && !anchored) {
      return true;
    } else if (star != std::string_view::npos) {
      p = star + 1;
      s = ++mark;
    } else {
      return false;
    }
  }
  while (p < pattern.size() && pattern[p] == '*') ++p;
  return p == pattern.size();
}

bool RobotsRules::allows(std::string_view path) const {
  const Rule* best = nullptr;
  for (const auto& r : rules) {
    if (r.pattern.empty()) continue;  // "Disallow:" with no value allows everything
    if (!robots_pattern_matches(r.pattern, path)) continue;
    if (!best || r.pattern.size() > best->pattern.size() ||
        (r.pattern.size() == best->pattern.size() && r.allow && !best->allow)) {
      best = &r;
    }
  }
  return !best || best->allow;
}

RobotsRules parse_robots(std::string_view text, std::string_view user_agent) {
  std::vector<Group> groups;
  bool last_was_agent = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    auto key = lower(trim(line.substr(0, colon)));
    auto value = trim(line.substr(colon + 1));
    if (key == "user-agent") {
      if (!last_was_agent || groups.empty()) groups.emplace_back();
      groups.back().agents.push_back(lower(value));
      last_was_agent = true;
      continue;
    }
    last_was_agent = false;
    if (groups.empty()) continue;
    auto& g = groups.back().rules;
    if (key == "allow" || key == "disallow") {
      g.rules.push_back({key == "allow", std::string(value)});
    } else if (key == "crawl-delay") {
      double seconds = 0;
      auto res = std::from_chars(value.data(), value.data() + value.size(), seconds);
      if (res.ec == std::errc{} && seconds >= 0) {
        g.crawl_delay = Duration{static_cast<std::int64_t>(seconds * 1000.0 + 0.5)};
      }
    }
  }

  const std::string ua = lower(user_agent);
  const Group* chosen = nullptr;
  std::size_t chosen_len = 0;
  const Group* wildcard = nullptr;
  for (const auto& g : groups) {
    for (const auto& agent : g.agents) {
      if (agent == "*") {
        if (!wildcard) wildcard = &g;
      } else if (!agent.empty() && ua.find(agent) != std::string::npos && agent.size() > chosen_len) {
        chosen = &g;
        chosen_len = agent.size();
      }
    }
  }
  if (!chosen) chosen = wildcard;
  return chosen ? chosen->rules : RobotsRules{};
}

}  // namespace retriever::download
