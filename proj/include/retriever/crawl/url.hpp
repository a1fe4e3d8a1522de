#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace retriever::crawl {

// Components of an absolute http(s) URL. `path` always starts with "/" once
// normalized; `query` excludes the leading "?".
struct Url {
  std::string scheme;
  std::string host;
  std::optional<int> port;
  std::string path;
  std::optional<std::string> query;

  std::string str() const;
};

struct UrlNormalization {
  // Query parameter names to drop. A trailing "*" matches by prefix.
  std::vector<std::string> tracking_params{"utm_*", "fbclid", "gclid"};
};

// Parses an absolute URL without normalizing it. nullopt when the text is not
// an absolute http(s) URL with a host.
std::optional<Url> parse_url(std::string_view raw);

// Resolves `raw` against `base` (RFC 3986 reference resolution), then strips
// the fragment and tracking parameters, lowercases scheme and host, removes
// default ports and dot segments, and percent-encodes stray bytes. Throws
// Rejected when the result is not an absolute http(s) URL.
std::string normalize_url(std::string_view raw, std::optional<std::string_view> base = std::nullopt,
                          const UrlNormalization& options = {});

// Non-throwing variant.
std::optional<std::string> try_normalize_url(std::string_view raw, std::optional<std::string_view> base = std::nullopt,
                                             const UrlNormalization& options = {});

// Host of an absolute URL with a leading "www." removed, for outlet matching.
std::string site_host(std::string_view url);

}  // namespace retriever::crawl
