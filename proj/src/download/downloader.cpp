#include "retriever/download/downloader.hpp"

#include <algorithm>
#include <thread>

#include "retriever/crawl/url.hpp"

namespace retriever::download {

namespace {

std::string path_and_query(const std::string& url) {
  auto u = crawl::parse_url(url);
  if (!u) return "/";
  std::string out = u->path.empty() ? "/" : u->path;
  if (u->query) out += "?" + *u->query;
  return out;
}

std::string origin_of(const std::string& url) {
  auto u = crawl::parse_url(url);
  if (!u) return {};
  std::string out = u->scheme + "://" + u->host;
  if (u->port) out += ":" + std::to_string(*u->port);
  return out;
}

}  // namespace

std::string_view to_string(FetchOutcome o) {
  switch (o) {
    case FetchOutcome::ok: return "ok";
    case FetchOutcome::dropped: return "dropped";
    case FetchOutcome::permanent: return "permanent";
    case FetchOutcome::transient: return "transient";
  }
  return "unknown";
}

bool is_html_content_type(std::string_view content_type) {
  std::string ct(content_type.substr(0, content_type.find(';')));
  std::transform(ct.begin(), ct.end(), ct.begin(), [](unsigned char c) { return std::tolower(c); });
  ct.erase(std::remove_if(ct.begin(), ct.end(), [](unsigned char c) { return std::isspace(c); }), ct.end());
  // Servers that omit the header are given the benefit of the doubt.
  return ct.empty() || ct == "text/html" || ct == "application/xhtml+xml";
}

nlohmann::json FetchResult::to_json() const {
  return {{"url", url},
          {"requested_url", requested_url},
          {"status", status},
          {"body", body},
          {"content_type", content_type},
          {"fetched_at", format_iso8601(fetched_at)},
          {"redirect_chain", redirect_chain}};
}

FetchResult FetchResult::from_json(const nlohmann::json& j) {
  FetchResult r;
  r.url = j.at("url").get<std::string>();
  r.requested_url = j.value("requested_url", r.url);
  r.status = j.value("status", 200);
  r.body = j.value("body", std::string{});
  r.content_type = j.value("content_type", std::string{"text/html"});
  if (auto t = parse_iso8601(j.value("fetched_at", std::string{}))) r.fetched_at = *t;
  r.redirect_chain = j.value("redirect_chain", std::vector<std::string>{});
  return r;
}

Downloader::Downloader(std::shared_ptr<HttpClient> client, std::shared_ptr<const Clock> clock,
                       DownloaderConfig config, Sleeper sleeper)
    : client_(std::move(client)), clock_(std::move(clock)), config_(std::move(config)), sleeper_(std::move(sleeper)) {
  if (!sleeper_) sleeper_ = [](Duration d) { std::this_thread::sleep_for(d); };
}

Duration Downloader::wait_time(const PolitenessState& state) const {
  if (!state.last_request_at) return Duration::zero();
  auto next = *state.last_request_at + state.crawl_delay;
  auto now = clock_->now();
  return next > now ? next - now : Duration::zero();
}

void Downloader::wait_turn(PolitenessState& state) {
  while (true) {
    auto w = wait_time(state);
    if (w <= Duration::zero()) return;
    sleeper_(w);
  }
}

HttpResponse Downloader::request(const std::string& url, PolitenessState& state) {
  wait_turn(state);
  // Clock readings are truncated to the millisecond; rounding the completion
  // time up keeps real gaps at or above crawl_delay.
  try {
    auto resp = client_->get(url, config_.user_agent, config_.size_cap);
    state.last_request_at = clock_->now() + Duration{1};
    return resp;
  } catch (...) {
    state.last_request_at = clock_->now() + Duration{1};
    throw;
  }
}

RobotsRules Downloader::load_robots(const std::string& homepage_url, PolitenessState& state) {
  RobotsRules rules = RobotsRules::allow_all();
  try {
    auto resp = request(origin_of(homepage_url) + "/robots.txt", state);
    if (resp.status >= 200 && resp.status < 300) rules = parse_robots(resp.body, config_.user_agent);
  } catch (const NetworkError&) {
    // Unreachable robots.txt: allow everything with the default delay.
  }
  rules.fetched_at = clock_->now();
  state.robots = rules;
  state.crawl_delay = rules.crawl_delay.value_or(config_.default_delay);
  return rules;
}

std::optional<Duration> Downloader::retry_delay(int attempts) const {
  if (attempts > config_.max_retries || config_.backoff.empty()) return std::nullopt;
  auto idx = static_cast<std::size_t>(std::max(0, attempts - 1));
  return config_.backoff[std::min(idx, config_.backoff.size() - 1)];
}

FetchAttempt Downloader::fetch(const crawl::UrlTask& task, PolitenessState& state) {
  if (!state.robots || clock_->now() - state.robots->fetched_at >= config_.robots_ttl) {
    load_robots(task.url, state);
  }
  if (!state.robots->allows(path_and_query(task.url))) {
    return {FetchOutcome::dropped, std::nullopt, "robots_disallowed"};
  }

  const std::string host = crawl::site_host(task.url);
  std::string url = task.url;
  std::vector<std::string> chain{url};
  for (int hop = 0;; ++hop) {
    HttpResponse resp;
    try {
      resp = request(url, state);
    } catch (const NetworkError& e) {
      return {FetchOutcome::transient, std::nullopt, e.what()};
    }
    if (resp.status >= 300 && resp.status < 400) {
      if (!resp.location) return {FetchOutcome::permanent, std::nullopt, "redirect_without_location"};
      if (hop + 1 >= config_.max_redirects) return {FetchOutcome::permanent, std::nullopt, "too_many_redirects"};
      auto next = crawl::try_normalize_url(*resp.location, url);
      if (!next) return {FetchOutcome::permanent, std::nullopt, "bad_redirect_target"};
      if (crawl::site_host(*next) != host) return {FetchOutcome::dropped, std::nullopt, "cross_host_redirect"};
      if (!state.robots->allows(path_and_query(*next))) return {FetchOutcome::dropped, std::nullopt, "robots_disallowed"};
      if (std::find(chain.begin(), chain.end(), *next) != chain.end()) {
        return {FetchOutcome::permanent, std::nullopt, "redirect_loop"};
      }
      url = *next;
      chain.push_back(url);
      continue;
    }
    if (resp.status == 429 || resp.status >= 500) {
      return {FetchOutcome::transient, std::nullopt, "http_" + std::to_string(resp.status)};
    }
    if (resp.status >= 400 || resp.status < 200) {
      return {FetchOutcome::permanent, std::nullopt, "http_" + std::to_string(resp.status)};
    }
    if (resp.truncated) return {FetchOutcome::dropped, std::nullopt, "size_cap"};
    if (!is_html_content_type(resp.content_type)) return {FetchOutcome::dropped, std::nullopt, "not_html"};
    if (resp.body.empty()) return {FetchOutcome::permanent, std::nullopt, "empty_body"};
    FetchResult result{url,  task.url, resp.status, std::move(resp.body), resp.content_type.empty() ? "text/html" : resp.content_type,
                       clock_->now(), std::move(chain)};
    return {FetchOutcome::ok, std::move(result), {}};
  }
}

}  // namespace retriever::download
