#include "retriever/extract/html.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_map>
#include <unordered_set>

#include "retriever/common/text.hpp"

namespace retriever::extract {
namespace {

const std::unordered_set<std::string_view> kVoid = {"area", "base", "br", "col", "embed", "hr", "img", "input",
                                                    "link", "meta", "param", "source", "track", "wbr"};
const std::unordered_set<std::string_view> kRawText = {"script", "style", "template", "textarea", "title",
                                                       "noscript", "xmp"};
// Block elements whose start implicitly closes an open <p>.
const std::unordered_set<std::string_view> kClosesP = {
    "address", "article", "aside", "blockquote", "div", "dl", "fieldset", "figure", "footer", "form", "h1",
    "h2", "h3", "h4", "h5", "h6", "header", "hr", "main", "nav", "ol", "p", "pre", "section", "table", "ul"};

const std::unordered_map<std::string_view, std::string_view> kEntities = {
    {"amp", "&"},      {"lt", "<"},       {"gt", ">"},       {"quot", "\""},    {"apos", "'"},
    {"nbsp", "\xC2\xA0"}, {"shy", "\xC2\xAD"}, {"ndash", "–"}, {"mdash", "—"}, {"hellip", "…"},
    {"lsquo", "‘"}, {"rsquo", "’"}, {"ldquo", "“"}, {"rdquo", "”"}, {"bdquo", "„"},
    {"laquo", "«"}, {"raquo", "»"}, {"copy", "©"}, {"reg", "®"}, {"euro", "€"},
    {"middot", "·"}, {"bull", "•"}, {"deg", "°"}, {"times", "×"}, {"scaron", "š"},
    {"Scaron", "Š"}, {"zcaron", "ž"}, {"Zcaron", "Ž"}, {"ccaron", "č"}, {"Ccaron", "Č"},
    {"cacute", "ć"}, {"Cacute", "Ć"}, {"dstrok", "đ"}, {"Dstrok", "Đ"}, {"eacute", "é"},
    {"uuml", "ü"}, {"ouml", "ö"}, {"auml", "ä"}, {"szlig", "ß"}, {"thinsp", "\xE2\x80\x89"},
    {"ensp", "\xE2\x80\x82"}, {"emsp", "\xE2\x80\x83"}, {"zwj", "\xE2\x80\x8D"}, {"zwnj", "\xE2\x80\x8C"},
};

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool is_name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == ':' || c == '.';
}

bool ieq_prefix(std::string_view s, std::size_t pos, std::string_view prefix) {
  if (s.size() - pos < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[pos + i])) != prefix[i]) return false;
  }
  return true;
}

class Builder {
 public:
  explicit Builder(Document& doc) : doc_(doc) {
    doc_.root = std::make_unique<Node>();
    doc_.root->tag = "#document";
    stack_.push_back(doc_.root.get());
  }

  void text(std::string_view raw) {
    if (raw.empty()) return;
    std::string decoded = decode_entities(raw);
    Node* top = stack_.back();
    if (!top->children.empty() && top->children.back()->is_text()) {
      top->children.back()->text += decoded;
      return;
    }
    auto node = std::make_unique<Node>();
    node->text = std::move(decoded);
    node->parent = top;
    top->children.push_back(std::move(node));
  }

  Node* open(std::string tag, std::vector<std::pair<std::string, std::string>> attrs) {
    if (kClosesP.count(tag)) close_if_open("p", true);
    if (tag == "li") close_if_open("li", true);
    if (tag == "option") close_if_open("option", true);
    if (tag == "dt" || tag == "dd") {
      close_if_open("dt", true);
      close_if_open("dd", true);
    }
    if (tag == "tr") close_if_open("tr", true);
    if (tag == "td" || tag == "th") {
      close_if_open("td", true);
      close_if_open("th", true);
    }
    auto node = std::make_unique<Node>();
    node->tag = std::move(tag);
    node->attrs = std::move(attrs);
    node->parent = stack_.back();
    Node* raw = node.get();
    stack_.back()->children.push_back(std::move(node));
    ++doc_.element_count;
    if (!kVoid.count(raw->tag)) stack_.push_back(raw);
    return raw;
  }

  void close(std::string_view tag) { close_if_open(tag, false); }

 private:
  // Pops up to and including the innermost open `tag`. With `scoped`, the
  // search stops at the nearest block container so that a <p> inside a
  // <div> is not closed by a sibling paragraph of an outer scope.
  void close_if_open(std::string_view tag, bool scoped) {
    for (std::size_t i = stack_.size(); i-- > 1;) {
      if (stack_[i]->tag == tag) {
        stack_.resize(i);
        return;
      }
      if (scoped && (stack_[i]->tag == "div" || stack_[i]->tag == "article" || stack_[i]->tag == "section" ||
                     stack_[i]->tag == "ul" || stack_[i]->tag == "ol" || stack_[i]->tag == "table" ||
                     stack_[i]->tag == "blockquote" || stack_[i]->tag == "td")) {
        return;
      }
    }
  }

  Document& doc_;
  std::vector<Node*> stack_;
};

std::vector<std::pair<std::string, std::string>> parse_attrs(std::string_view s, std::size_t& pos) {
  std::vector<std::pair<std::string, std::string>> attrs;
  while (pos < s.size()) {
    while (pos < s.size() && (std::isspace(static_cast<unsigned char>(s[pos])) || s[pos] == '/')) ++pos;
    if (pos >= s.size() || s[pos] == '>') break;
    std::size_t start = pos;
    while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos])) && s[pos] != '=' && s[pos] != '>' &&
           s[pos] != '/') {
      ++pos;
    }
    std::string name = lower_ascii(s.substr(start, pos - start));
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    std::string value;
    if (pos < s.size() && s[pos] == '=') {
      ++pos;
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
      if (pos < s.size() && (s[pos] == '"' || s[pos] == '\'')) {
        char quote = s[pos++];
        std::size_t end = s.find(quote, pos);
        if (end == std::string_view::npos) end = s.size();
        value = decode_entities(s.substr(pos, end - pos));
        pos = std::min(end + 1, s.size());
      } else {
        std::size_t vstart = pos;
        while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos])) && s[pos] != '>') ++pos;
        value = decode_entities(s.substr(vstart, pos - vstart));
      }
    }
    if (!name.empty()) attrs.emplace_back(std::move(name), std::move(value));
  }
  return attrs;
}

}  // namespace

std::optional<std::string_view> Node::attr(std::string_view name) const {
  for (const auto& [k, v] : attrs) {
    if (k == name) return std::string_view{v};
  }
  return std::nullopt;
}

std::string Node::text_content() const {
  std::string out;
  auto rec = [&out](const Node& n, auto& self) -> void {
    if (n.is_text()) {
      out += n.text;
      return;
    }
    if (n.tag == "br") out += '\n';
    for (const auto& c : n.children) self(*c, self);
  };
  rec(*this, rec);
  return out;
}

std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size();) {
    if (s[i] != '&') {
      out += s[i++];
      continue;
    }
    std::size_t semi = s.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 12) {
      out += s[i++];
      continue;
    }
    std::string_view name = s.substr(i + 1, semi - i - 1);
    if (!name.empty() && name[0] == '#') {
      char32_t cp = 0;
      bool ok = name.size() > 1;
      bool hex = ok && (name[1] == 'x' || name[1] == 'X');
      for (std::size_t k = hex ? 2 : 1; ok && k < name.size(); ++k) {
        char c = name[k];
        int digit = hex ? (std::isxdigit(static_cast<unsigned char>(c))
                               ? (std::isdigit(static_cast<unsigned char>(c)) ? c - '0' : (std::tolower(c) - 'a' + 10))
                               : -1)
                        : (std::isdigit(static_cast<unsigned char>(c)) ? c - '0' : -1);
        if (digit < 0) ok = false;
        else cp = cp * (hex ? 16 : 10) + static_cast<char32_t>(digit);
        if (cp > 0x10FFFF) ok = false;
      }
      if (ok && hex && name.size() == 2) ok = false;
      if (ok) {
        if (cp == 0 || (cp >= 0xD800 && cp <= 0xDFFF)) cp = 0xFFFD;
        append_utf8(out, cp);
        i = semi + 1;
        continue;
      }
    } else if (auto it = kEntities.find(name); it != kEntities.end()) {
      out += it->second;
      i = semi + 1;
      continue;
    }
    out += s[i++];
  }
  return out;
}

Document parse_html(std::string_view s) {
  Document doc;
  Builder builder(doc);
  std::size_t pos = 0;
  std::size_t text_start = 0;
  auto flush_text = [&](std::size_t end) {
    if (end > text_start) builder.text(s.substr(text_start, end - text_start));
  };
  while (pos < s.size()) {
    if (s[pos] != '<') {
      ++pos;
      continue;
    }
    if (s.compare(pos, 4, "<!--") == 0) {
      flush_text(pos);
      std::size_t end = s.find("-->", pos + 4);
      pos = end == std::string_view::npos ? s.size() : end + 3;
      text_start = pos;
      continue;
    }
    if (pos + 1 < s.size() && (s[pos + 1] == '!' || s[pos + 1] == '?')) {
      flush_text(pos);
      std::size_t end = s.find('>', pos);
      pos = end == std::string_view::npos ? s.size() : end + 1;
      text_start = pos;
      continue;
    }
    bool closing = pos + 1 < s.size() && s[pos + 1] == '/';
    std::size_t name_start = pos + (closing ? 2 : 1);
    std::size_t name_end = name_start;
    while (name_end < s.size() && is_name_char(s[name_end])) ++name_end;
    if (name_end == name_start || !std::isalpha(static_cast<unsigned char>(s[name_start]))) {
      ++pos;  // a literal '<'
      continue;
    }
    flush_text(pos);
    std::string tag = lower_ascii(s.substr(name_start, name_end - name_start));
    std::size_t cursor = name_end;
    if (closing) {
      std::size_t end = s.find('>', cursor);
      pos = end == std::string_view::npos ? s.size() : end + 1;
      text_start = pos;
      builder.close(tag);
      continue;
    }
    auto attrs = parse_attrs(s, cursor);
    bool self_closing = cursor > 0 && cursor <= s.size() && s[cursor - 1] == '/';
    pos = cursor < s.size() ? cursor + 1 : s.size();
    text_start = pos;
    if (kRawText.count(tag)) {
      std::string close = "</" + tag;
      std::size_t end = pos;
      while (end < s.size() && !ieq_prefix(s, end, close)) {
        end = s.find('<', end + 1);
        if (end == std::string_view::npos) end = s.size();
      }
      std::string_view content = s.substr(pos, end - pos);
      if (tag == "script") {
        std::string type;
        for (const auto& [k, v] : attrs) {
          if (k == "type") type = lower_ascii(v);
        }
        doc.scripts.emplace_back(std::move(type), std::string(content));
      }
      Node* node = builder.open(tag, std::move(attrs));
      // Titles and textareas keep their text; the rest is dropped.
      if (tag == "title" || tag == "textarea") builder.text(content);
      (void)node;
      builder.close(tag);
      std::size_t gt = s.find('>', end);
      pos = gt == std::string_view::npos ? s.size() : gt + 1;
      text_start = pos;
      continue;
    }
    builder.open(tag, std::move(attrs));
    if (self_closing && !kVoid.count(tag)) builder.close(tag);
  }
  flush_text(s.size());
  return doc;
}

}  // namespace retriever::extract
