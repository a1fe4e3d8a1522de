#include "retriever/crawl/url.hpp"

#include <algorithm>
#include <cctype>

#include "retriever/common/error.hpp"

namespace retriever::crawl {

namespace {

// RFC 3986 appendix B split of a URI reference.
struct Reference {
  std::optional<std::string> scheme;
  std::optional<std::string> authority;
  std::string path;
  std::optional<std::string> query;
};

std::string trim(std::string_view s) {
  auto is_ws = [](unsigned char c) { return c <= 0x20; };
  while (!s.empty() && is_ws(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && is_ws(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  std::string out;
  out.reserve(s.size());
  // Browsers drop tabs and newlines anywhere inside a URL.
  for (char c : s) {
    if (c != '\t' && c != '\n' && c != '\r') out.push_back(c);
  }
  return out;
}

Reference split(std::string_view s) {
  Reference r;
  if (auto hash = s.find('#'); hash != std::string_view::npos) s = s.substr(0, hash);
  auto colon = s.find(':');
  auto first_delim = s.find_first_of("/?#");
  if (colon != std::string_view::npos && colon > 0 && (first_delim == std::string_view::npos || colon < first_delim)) {
    auto scheme = s.substr(0, colon);
    bool ok = std::isalpha(static_cast<unsigned char>(scheme[0])) &&
              std::all_of(scheme.begin(), scheme.end(), [](char c) {
                return std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.';
              });
    if (ok) {
      r.scheme = std::string(scheme);
      s.remove_prefix(colon + 1);
    }
  }
  if (s.starts_with("//")) {
    s.remove_prefix(2);
    auto end = s.find_first_of("/?");
    r.authority = std::string(s.substr(0, end));
    s = end == std::string_view::npos ? std::string_view{} : s.substr(end);
  }
  auto q = s.find('?');
  r.path = std::string(s.substr(0, q));
  if (q != std::string_view::npos) r.query = std::string(s.substr(q + 1));
  return r;
}

std::string remove_dot_segments(std::string_view in) {
  std::string input(in);
  std::string output;
  while (!input.empty()) {
    if (input.starts_with("../")) {
      input.erase(0, 3);
    } else if (input.starts_with("./")) {
      input.erase(0, 2);
    } else if (input.starts_with("/./")) {
      input.replace(0, 3, "/");
    } else if (input == "/.") {
      input = "/";
    } else if (input.starts_with("/../") || input == "/..") {
      input = input == "/.." ? "/" : input.substr(3);
      auto slash = output.rfind('/');
      output.erase(slash == std::string::npos ? 0 : slash);
    } else if (input == "." || input == "..") {
      input.clear();
    } else {
      auto start = input[0] == '/' ? 1 : 0;
      auto next = input.find('/', static_cast<std::size_t>(start));
      output += input.substr(0, next);
      input.erase(0, next == std::string::npos ? input.size() : next);
    }
  }
  return output;
}

std::string merge_paths(const Reference& base, std::string_view ref_path) {
  if (base.authority && base.path.empty()) return "/" + std::string(ref_path);
  auto slash = base.path.rfind('/');
  if (slash == std::string::npos) return std::string(ref_path);
  return base.path.substr(0, slash + 1) + std::string(ref_path);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

// Percent-encodes bytes that may not appear raw in a URL. Existing escapes
// are left alone, so the operation is idempotent.
std::string encode_stray(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  out.reserve(s.size());
  for (unsigned char c : s) {
    if (c <= 0x20 || c >= 0x7F || c == '"' || c == '<' || c == '>' || c == '`' || c == '{' || c == '}' ||
        c == '|' || c == '\\' || c == '^') {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 0xF]);
    } else {
      out.push_back(static_cast<char>(c));
    }
  }
  return out;
}

bool is_tracking(std::string_view name, const UrlNormalization& options) {
  std::string n = lower(std::string(name));
  for (const auto& pattern : options.tracking_params) {
    if (pattern.ends_with('*')) {
      if (n.starts_with(std::string_view(pattern).substr(0, pattern.size() - 1))) return true;
    } else if (n == pattern) {
      return true;
    }
  }
  return false;
}

std::optional<std::string> filter_query(std::string_view query, const UrlNormalization& options) {
  std::string out;
  std::size_t pos = 0;
  while (pos <= query.size()) {
    auto amp = query.find('&', pos);
    auto param = query.substr(pos, amp == std::string_view::npos ? std::string_view::npos : amp - pos);
    if (!param.empty()) {
      auto name = param.substr(0, param.find('='));
      if (!is_tracking(name, options)) {
        if (!out.empty()) out.push_back('&');
        out += param;
      }
    }
    if (amp == std::string_view::npos) break;
    pos = amp + 1;
  }
  if (out.empty()) return std::nullopt;
  return out;
}

std::optional<Url> from_reference(const Reference& r) {
  if (!r.scheme || !r.authority) return std::nullopt;
  Url u;
  u.scheme = lower(*r.scheme);
  if (u.scheme != "http" && u.scheme != "https") return std::nullopt;
  std::string_view auth = *r.authority;
  if (auto at = auth.rfind('@'); at != std::string_view::npos) auth.remove_prefix(at + 1);
  std::string_view host = auth;
  std::string_view port;
  if (auth.starts_with('[')) {
    auto close = auth.find(']');
    if (close == std::string_view::npos) return std::nullopt;
    host = auth.substr(0, close + 1);
    if (close + 1 < auth.size()) {
      if (auth[close + 1] != ':') return std::nullopt;
      port = auth.substr(close + 2);
    }
  } else if (auto colon = auth.rfind(':'); colon != std::string_view::npos) {
    host = auth.substr(0, colon);
    port = auth.substr(colon + 1);
  }
  if (host.empty()) return std::nullopt;
  for (unsigned char c : host) {
    if (c <= 0x20 || c == '/' || c == '\\' || c == '?' || c == '#') return std::nullopt;
  }
  u.host = lower(std::string(host));
  while (u.host.size() > 1 && u.host.back() == '.') u.host.pop_back();
  if (!port.empty()) {
    if (port.size() > 5 || !std::all_of(port.begin(), port.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      return std::nullopt;
    }
    int p = std::stoi(std::string(port));
    if (p < 1 || p > 65535) return std::nullopt;
    if (!((u.scheme == "http" && p == 80) || (u.scheme == "https" && p == 443))) u.port = p;
  }
  u.path = r.path;
  u.query = r.query;
  return u;
}

}  // namespace

std::string Url::str() const {
  std::string out = scheme + "://" + host;
  if (port) out += ":" + std::to_string(*port);
  out += path.empty() ? "/" : path;
  if (query) out += "?" + *query;
  return out;
}

std::optional<Url> parse_url(std::string_view raw) { return from_reference(split(trim(raw))); }

std::optional<std::string> try_normalize_url(std::string_view raw, std::optional<std::string_view> base,
                                             const UrlNormalization& options) {
  std::string text = trim(raw);
  if (text.empty()) return std::nullopt;
  Reference ref = split(text);
  Reference target;
  if (ref.scheme) {
    target = ref;
    target.path = remove_dot_segments(ref.path);
  } else {
    if (!base) return std::nullopt;
    Reference b = split(trim(*base));
    if (!b.scheme) return std::nullopt;
    target.scheme = b.scheme;
    if (ref.authority) {
      target.authority = ref.authority;
      target.path = remove_dot_segments(ref.path);
      target.query = ref.query;
    } else {
      target.authority = b.authority;
      if (ref.path.empty()) {
        target.path = b.path;
        target.query = ref.query ? ref.query : b.query;
      } else {
        target.path = ref.path.starts_with('/') ? remove_dot_segments(ref.path)
                                                : remove_dot_segments(merge_paths(b, ref.path));
        target.query = ref.query;
      }
    }
  }
  auto url = from_reference(target);
  if (!url) return std::nullopt;
  if (url->path.empty()) url->path = "/";
  url->path = encode_stray(url->path);
  if (url->query) {
    url->query = filter_query(encode_stray(*url->query), options);
  }
  return url->str();
}

std::string normalize_url(std::string_view raw, std::optional<std::string_view> base,
                          const UrlNormalization& options) {
  auto out = try_normalize_url(raw, base, options);
  if (!out) throw Rejected("unparsable URL: " + std::string(raw));
  return *out;
}

std::string site_host(std::string_view url) {
  auto u = parse_url(url);
  if (!u) return {};
  std::string h = u->host;
  if (h.starts_with("www.")) h.erase(0, 4);
  if (u->port) h += ":" + std::to_string(*u->port);
  return h;
}

}  // namespace retriever::crawl
