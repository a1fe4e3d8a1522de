#include "retriever/download/http_client.hpp"

#include <httplib.h>

#include "retriever/crawl/url.hpp"

namespace retriever::download {

HttpResponse HttplibClient::get(const std::string& url, const std::string& user_agent, std::size_t max_bytes) {
  auto parsed = crawl::parse_url(url);
  if (!parsed) throw NetworkError("unparsable URL " + url);
  std::string origin = parsed->scheme + "://" + parsed->host;
  if (parsed->port) origin += ":" + std::to_string(*parsed->port);
  std::string target = parsed->path.empty() ? "/" : parsed->path;
  if (parsed->query) target += "?" + *parsed->query;

  httplib::Client client(origin);
  client.set_follow_location(false);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeouts_.connect));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeouts_.read));
  client.set_keep_alive(false);

  HttpResponse out;
  httplib::Headers headers{{"User-Agent", user_agent}, {"Accept", "text/html,application/xhtml+xml,*/*;q=0.5"}};
  auto result = client.Get(
      target, headers,
      [&](const httplib::Response& r) {
        out.status = r.status;
        out.content_type = r.get_header_value("Content-Type");
        if (r.has_header("Location")) out.location = r.get_header_value("Location");
        return true;
      },
      [&](const char* data, std::size_t len) {
        if (out.body.size() + len > max_bytes) {
          out.truncated = true;
          return false;
        }
        out.body.append(data, len);
        return true;
      });
  if (!result && !out.truncated) throw NetworkError("request to " + url + " failed: " + httplib::to_string(result.error()));
  return out;
}

}  // namespace retriever::download
