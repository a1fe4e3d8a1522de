#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "retriever/common/clock.hpp"
#include "retriever/crawl/scheduler.hpp"
#include "retriever/download/http_client.hpp"
#include "retriever/download/robots.hpp"

namespace retriever::download {

using namespace std::chrono_literals;

struct DownloaderConfig {
  std::string user_agent = "RetrieverBot/1.0 (+https://retriever.example.org/bot)";
  Duration default_delay = 2s;
  int max_retries = 3;
  std::size_t size_cap = 10 * 1024 * 1024;
  std::vector<Duration> backoff{1s, 5s, 25s};
  Duration robots_ttl = 24h;
  int max_redirects = 10;
};

struct FetchResult {
  std::string url;
  std::string requested_url;
  int status = 0;
  std::string body;
  std::string content_type;
  Timestamp fetched_at;
  std::vector<std::string> redirect_chain;

  nlohmann::json to_json() const;
  static FetchResult from_json(const nlohmann::json& j);
};

struct PolitenessState {
  std::string outlet_id;
  std::optional<Timestamp> last_request_at;
  Duration crawl_delay{2000};
  std::optional<RobotsRules> robots;
};

enum class FetchOutcome {
  ok,
  dropped,    // robots-disallowed, cross-host redirect, non-HTML, oversized
  permanent,  // 4xx other than 429, broken redirect
  transient,  // 429, 5xx, timeout, connection error
};

std::string_view to_string(FetchOutcome o);

struct FetchAttempt {
  FetchOutcome outcome = FetchOutcome::ok;
  std::optional<FetchResult> result;
  std::string reason;
};

// Fetches one URL task politely. Every request to the outlet, including
// robots.txt and redirect hops, starts no earlier than crawl_delay after the
// previous request to that outlet completed.
class Downloader {
 public:
  using Sleeper = std::function<void(Duration)>;

  Downloader(std::shared_ptr<HttpClient> client, std::shared_ptr<const Clock> clock = system_clock(),
             DownloaderConfig config = {}, Sleeper sleeper = {});

  // Fetches and parses <origin>/robots.txt. Failures degrade to allow-all.
  RobotsRules load_robots(const std::string& homepage_url, PolitenessState& state);

  FetchAttempt fetch(const crawl::UrlTask& task, PolitenessState& state);

  // Broker retry delay for a transient failure on the given delivery
  // attempt; nullopt once max_retries is exhausted.
  std::optional<Duration> retry_delay(int attempts) const;

  // Time until the outlet may be contacted again.
  Duration wait_time(const PolitenessState& state) const;

  const DownloaderConfig& config() const { return config_; }

 private:
  void wait_turn(PolitenessState& state);
  HttpResponse request(const std::string& url, PolitenessState& state);

  std::shared_ptr<HttpClient> client_;
  std::shared_ptr<const Clock> clock_;
  DownloaderConfig config_;
  Sleeper sleeper_;
};

bool is_html_content_type(std::string_view content_type);

}  // namespace retriever::download
