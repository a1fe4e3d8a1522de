#include "retriever/extract/extractor.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "retriever/common/text.hpp"
#include "retriever/extract/html.hpp"

namespace retriever::extract {
namespace {

using nlohmann::json;

const std::unordered_set<std::string_view> kExcludedTags = {
    "nav", "aside", "footer", "header", "form", "button", "select", "iframe", "svg", "figcaption", "noscript",
    "menu", "dialog"};
const std::unordered_set<std::string_view> kExcludedRoles = {"navigation", "complementary", "contentinfo",
                                                             "banner", "menu", "dialog", "search"};
// class/id tokens that mark boilerplate.
const std::unordered_set<std::string_view> kNegativeTokens = {
    "comment", "comments", "disqus", "sidebar", "side", "nav", "navbar", "menu", "footer", "header", "masthead",
    "ad", "ads", "advert", "advertisement", "banner", "sponsor", "sponsored", "promo", "related", "share",
    "sharing", "social", "cookie", "cookies", "newsletter", "subscribe", "popup", "modal", "widget", "breadcrumb",
    "breadcrumbs", "tags", "pagination", "outbrain", "taboola", "recommended", "most-read", "mostread", "trending"};

constexpr std::size_t kMinScoredParagraph = 25;

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool has_negative_token(std::string_view value) {
  std::string lowered = lower_ascii(value);
  std::size_t i = 0;
  while (i < lowered.size()) {
    while (i < lowered.size() && !std::isalnum(static_cast<unsigned char>(lowered[i]))) ++i;
    std::size_t start = i;
    while (i < lowered.size() && std::isalnum(static_cast<unsigned char>(lowered[i]))) ++i;
    if (i == start) continue;
    std::string_view token(lowered.data() + start, i - start);
    if (kNegativeTokens.count(token)) return true;
    if (token.rfind("comment", 0) == 0 || token.rfind("advert", 0) == 0) return true;
  }
  // Whole-value forms such as "most-read".
  return kNegativeTokens.count(lowered) > 0;
}

bool is_excluded(const Node& n) {
  if (kExcludedTags.count(n.tag)) return true;
  if (auto role = n.attr("role"); role && kExcludedRoles.count(lower_ascii(*role))) return true;
  if (n.attr("hidden")) return true;
  if (auto style = n.attr("style")) {
    std::string s = lower_ascii(*style);
    s.erase(std::remove_if(s.begin(), s.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); }),
            s.end());
    if (s.find("display:none") != std::string::npos) return true;
  }
  if (auto cls = n.attr("class"); cls && has_negative_token(*cls)) return true;
  if (auto id = n.attr("id"); id && has_negative_token(*id)) return true;
  return false;
}

struct Paragraph {
  const Node* node;
  std::string text;  // normalized
  std::size_t length = 0;       // code points
  std::size_t link_length = 0;  // code points inside <a>
};

std::size_t link_text_length(const Node& n) {
  std::size_t total = 0;
  walk(n, [&](const Node& e) {
    if (e.tag == "a") {
      total += codepoint_length(normalize_text(e.text_content()));
      return false;
    }
    return true;
  });
  return total;
}

std::vector<Paragraph> collect_paragraphs(const Node& root) {
  std::vector<Paragraph> out;
  walk(root, [&](const Node& n) {
    if (is_excluded(n)) return false;
    if (n.tag == "p") {
      Paragraph p{&n, normalize_text(n.text_content())};
      p.length = codepoint_length(p.text);
      p.link_length = link_text_length(n);
      if (p.length > 0) out.push_back(std::move(p));
      return false;
    }
    return true;
  });
  return out;
}

bool is_ancestor(const Node* ancestor, const Node* node) {
  for (const Node* n = node; n; n = n->parent) {
    if (n == ancestor) return true;
  }
  return false;
}

double link_density(const std::vector<const Paragraph*>& ps) {
  std::size_t text = 0, links = 0;
  for (const auto* p : ps) {
    text += p->length;
    links += p->link_length;
  }
  return text == 0 ? 0.0 : static_cast<double>(links) / static_cast<double>(text);
}

bool is_article_container(const Node& n) {
  if (n.tag == "article") return true;
  auto prop = n.attr("itemprop");
  return prop && lower_ascii(*prop) == "articlebody";
}

// Chooses the main content containers and returns their paragraph text.
std::string main_content(const Node& root) {
  std::vector<Paragraph> paragraphs = collect_paragraphs(root);
  if (paragraphs.empty()) return {};

  std::unordered_map<const Node*, double> score;
  std::vector<const Node*> order;  // first-seen document order
  auto add = [&](const Node* n, double s) {
    if (!n || n->tag == "#document") return;
    auto [it, inserted] = score.emplace(n, 0.0);
    if (inserted) order.push_back(n);
    it->second += s;
  };
  for (const auto& p : paragraphs) {
    if (p.length < kMinScoredParagraph) continue;
    double s = 1.0 + static_cast<double>(std::count(p.text.begin(), p.text.end(), ',')) +
               std::min(static_cast<double>(p.length) / 100.0, 3.0);
    add(p.node->parent, s);
    if (p.node->parent) add(p.node->parent->parent, s / 2.0);
  }

  auto paragraphs_in = [&](const Node* container) {
    std::vector<const Paragraph*> out;
    for (const auto& p : paragraphs) {
      if (is_ancestor(container, p.node)) out.push_back(&p);
    }
    return out;
  };

  const Node* top = nullptr;
  double top_score = 0.0;
  std::unordered_map<const Node*, double> final_score;
  for (const Node* n : order) {
    double s = score[n] * (1.0 - link_density(paragraphs_in(n)));
    final_score[n] = s;
    if (!top || s > top_score) {
      top = n;
      top_score = s;
    }
  }
  if (!top) {
    // Only short paragraphs: take the parent holding the most paragraph text.
    std::map<const Node*, std::size_t> text_by_parent;
    for (const auto& p : paragraphs) text_by_parent[p.node->parent] += p.length;
    std::size_t best = 0;
    for (const auto& p : paragraphs) {
      if (text_by_parent[p.node->parent] > best) {
        best = text_by_parent[p.node->parent];
        top = p.node->parent;
      }
    }
  }

  std::vector<const Node*> containers{top};
  if (top->parent && is_article_container(*top->parent)) {
    containers = {top->parent};
  } else if (top->parent) {
    for (const auto& sibling : top->parent->children) {
      const Node* s = sibling.get();
      if (s == top || !s->is_element()) continue;
      auto it = final_score.find(s);
      if (it == final_score.end()) continue;
      if (it->second >= std::max(1.0, top_score * 0.2) && link_density(paragraphs_in(s)) < 0.25) {
        containers.push_back(s);
      }
    }
  }

  std::string body;
  for (const auto& p : paragraphs) {
    bool inside = std::any_of(containers.begin(), containers.end(),
                              [&](const Node* c) { return is_ancestor(c, p.node); });
    if (!inside) continue;
    // Link-list paragraphs ("Read also: ...") are navigation, not content.
    if (p.length > 0 && static_cast<double>(p.link_length) / static_cast<double>(p.length) > 0.5) continue;
    if (!body.empty()) body += '\n';
    body += p.text;
  }
  return normalize_text(body);
}

std::optional<std::string_view> meta_content(const Node& root, std::initializer_list<std::string_view> keys) {
  std::optional<std::string_view> found;
  for (std::string_view key : keys) {
    walk(root, [&](const Node& n) {
      if (found) return false;
      if (n.tag != "meta") return true;
      for (std::string_view attr : {"property", "name", "itemprop"}) {
        auto v = n.attr(attr);
        if (v && lower_ascii(*v) == key) {
          if (auto content = n.attr("content"); content && !content->empty()) found = content;
        }
      }
      return true;
    });
    if (found) return found;
  }
  return std::nullopt;
}

void find_json_key(const json& j, std::string_view key, std::optional<std::string>& out) {
  if (out) return;
  if (j.is_object()) {
    if (auto it = j.find(std::string(key)); it != j.end() && it->is_string()) {
      out = it->get<std::string>();
      return;
    }
    for (const auto& [_, v] : j.items()) find_json_key(v, key, out);
  } else if (j.is_array()) {
    for (const auto& v : j) find_json_key(v, key, out);
  }
}

std::optional<std::string> json_ld(const Document& doc, std::string_view key) {
  std::optional<std::string> out;
  for (const auto& [type, content] : doc.scripts) {
    if (type != "application/ld+json") continue;
    json j = json::parse(content, nullptr, false);
    if (j.is_discarded()) continue;
    find_json_key(j, key, out);
    if (out) break;
  }
  return out;
}

const Node* first_element(const Node& root, std::string_view tag, bool skip_excluded) {
  const Node* found = nullptr;
  walk(root, [&](const Node& n) {
    if (found) return false;
    if (skip_excluded && is_excluded(n) && n.tag != tag) return false;
    if (n.tag == tag) {
      found = &n;
      return false;
    }
    return true;
  });
  return found;
}

std::string extract_title(const Document& doc) {
  const Node& root = *doc.root;
  if (auto og = meta_content(root, {"og:title"})) {
    std::string t = normalize_text(*og);
    if (!t.empty()) return t;
  }
  if (auto headline = json_ld(doc, "headline")) {
    std::string t = normalize_text(*headline);
    if (!t.empty()) return t;
  }
  if (const Node* h1 = first_element(root, "h1", false)) {
    std::string t = normalize_text(h1->text_content());
    if (!t.empty()) return t;
  }
  if (const Node* title = first_element(root, "title", false)) return normalize_text(title->text_content());
  return {};
}

std::optional<Timestamp> extract_date(const Document& doc, std::string_view url, const crawl::CompiledRules& rules) {
  const Node& root = *doc.root;
  if (auto v = meta_content(root, {"article:published_time", "datepublished", "og:published_time",
                                   "publish-date", "pubdate", "date"})) {
    if (auto ts = parse_iso8601(*v)) return ts;
  }
  std::optional<Timestamp> from_markup;
  walk(root, [&](const Node& n) {
    if (from_markup) return false;
    auto prop = n.attr("itemprop");
    if (prop && lower_ascii(*prop) == "datepublished") {
      for (std::string_view attr : {"content", "datetime"}) {
        if (auto v = n.attr(attr); v && !from_markup) from_markup = parse_iso8601(*v);
      }
    }
    return true;
  });
  if (from_markup) return from_markup;
  if (auto v = json_ld(doc, "datePublished")) {
    if (auto ts = parse_iso8601(*v)) return ts;
  }
  std::optional<Timestamp> from_time;
  walk(root, [&](const Node& n) {
    if (from_time) return false;
    if (n.tag == "time") {
      if (auto v = n.attr("datetime")) from_time = parse_iso8601(*v);
    }
    return true;
  });
  if (from_time) return from_time;
  if (auto day = rules.date_from_url(url)) return Timestamp{*day};
  return std::nullopt;
}

std::vector<std::string> extract_links(const Document& doc, std::string_view url, const crawl::CompiledRules& rules,
                                       const crawl::UrlNormalization& normalization) {
  std::string base(url);
  if (const Node* b = first_element(*doc.root, "base", false)) {
    if (auto href = b->attr("href")) {
      if (auto resolved = crawl::try_normalize_url(*href, url, normalization)) base = *resolved;
    }
  }
  std::vector<std::string> links;
  std::unordered_set<std::string> seen;
  walk(*doc.root, [&](const Node& n) {
    if (n.tag != "a") return true;
    auto href = n.attr("href");
    if (!href) return true;
    auto link = crawl::try_normalize_url(*href, base, normalization);
    if (link && rules.same_outlet(*link) && seen.insert(*link).second) links.push_back(std::move(*link));
    return true;
  });
  return links;
}

}  // namespace

ExtractedPage extract_html(std::string_view html, std::string_view url, const crawl::CompiledRules& rules,
                           const crawl::UrlNormalization& normalization) {
  Document doc = parse_html(html);
  if (doc.element_count == 0) throw ExtractionError("unparsable_html");
  ExtractedPage page;
  page.title = extract_title(doc);
  page.body = main_content(*doc.root);
  if (page.title.empty() && page.body.empty()) throw ExtractionError("empty_extraction");
  page.published_at = extract_date(doc, url, rules);
  page.links = extract_links(doc, url, rules, normalization);
  return page;
}

std::vector<std::string> extract_links_only(std::string_view html, std::string_view url,
                                            const crawl::CompiledRules& rules,
                                            const crawl::UrlNormalization& normalization) {
  return extract_links(parse_html(html), url, rules, normalization);
}

ExtractedPage extract(const download::FetchResult& result, const crawl::CompiledRules& rules,
                      const crawl::UrlNormalization& normalization) {
  return extract_html(result.body, result.url, rules, normalization);
}

}  // namespace retriever::extract
