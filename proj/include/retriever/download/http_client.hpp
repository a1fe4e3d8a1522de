#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "retriever/common/error.hpp"
#include "retriever/common/time.hpp"

namespace retriever::download {

// Connection refused, DNS failure, timeout: anything without an HTTP status.
class NetworkError : public Error {
 public:
  using Error::Error;
};

struct HttpResponse {
  int status = 0;
  std::string body;
  std::string content_type;
  std::optional<std::string> location;
  // The body exceeded the byte cap and was cut off.
  bool truncated = false;
};

class HttpClient {
 public:
  virtual ~HttpClient() = default;
  // Single request; never follows redirects.
  virtual HttpResponse get(const std::string& url, const std::string& user_agent, std::size_t max_bytes) = 0;
};

struct HttpTimeouts {
  Duration connect{10'000};
  Duration read{30'000};
};

// cpp-httplib backed client (plain HTTP, plus HTTPS when built with OpenSSL).
class HttplibClient final : public HttpClient {
 public:
  explicit HttplibClient(HttpTimeouts timeouts = {}) : timeouts_(timeouts) {}
  HttpResponse get(const std::string& url, const std::string& user_agent, std::size_t max_bytes) override;

 private:
  HttpTimeouts timeouts_;
};

}  // namespace retriever::download
