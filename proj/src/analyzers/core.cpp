#include "retriever/analyzers/core.hpp"

#include <unicode/brkiter.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include <fstream>
#include <memory>

#include "retriever/common/error.hpp"
#include "retriever/common/text.hpp"

namespace retriever::analyzers {
namespace {

bool all_space(std::u32string_view s) {
  for (char32_t c : s) {
    if (!is_space(c)) return false;
  }
  return true;
}

bool has_letter(std::u32string_view s) {
  for (char32_t c : s) {
    if (u_isalpha(static_cast<UChar32>(c))) return true;
  }
  return false;
}

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

bool starts_lowercase(std::string_view s) {
  auto cps = to_u32(s);
  return !cps.empty() && u_islower(static_cast<UChar32>(cps.front()));
}

bool is_terminal(std::string_view t) {
  return t == "." || t == "!" || t == "?" || t == "…" || t == "..." || t == "?!" || t == "!?";
}

std::unique_ptr<icu::BreakIterator> word_breaker() {
  UErrorCode status = U_ZERO_ERROR;
  std::unique_ptr<icu::BreakIterator> it(icu::BreakIterator::createWordInstance(icu::Locale::getRoot(), status));
  if (U_FAILURE(status)) throw std::runtime_error("ICU word break iterator unavailable");
  return it;
}

// Appends the tokens of `text` with offsets shifted by `base`.
void tokenize_into(std::string_view text, std::size_t base, std::vector<Token>& out) {
  if (text.empty()) return;
  thread_local std::unique_ptr<icu::BreakIterator> breaker = word_breaker();
  icu::UnicodeString us = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  breaker->setText(us);
  std::size_t cp = 0;
  int32_t prev = breaker->first();
  for (int32_t next = breaker->next(); next != icu::BreakIterator::DONE; prev = next, next = breaker->next()) {
    std::u32string segment;
    for (int32_t i = prev; i < next;) {
      UChar32 c = us.char32At(i);
      segment.push_back(static_cast<char32_t>(c));
      i += U16_LENGTH(c);
    }
    std::size_t len = segment.size();
    if (!all_space(segment)) {
      Token t;
      t.text = to_utf8(segment);
      t.start = base + cp;
      t.end = base + cp + len;
      t.is_alpha = has_letter(segment);
      out.push_back(std::move(t));
    }
    cp += len;
  }
}

}  // namespace

nlohmann::json CoreResult::to_json() const {
  nlohmann::json sents = nlohmann::json::array();
  for (const auto& s : sentences) sents.push_back({s.start, s.end});
  nlohmann::json toks = nlohmann::json::array();
  for (const auto& t : tokens) toks.push_back({t.text, t.lemma, t.start, t.end, t.sentence_index, t.is_alpha});
  return {{"sentences", std::move(sents)}, {"tokens", std::move(toks)}};
}

CoreResult CoreResult::from_json(const nlohmann::json& j) {
  CoreResult r;
  try {
    for (const auto& s : j.at("sentences")) r.sentences.push_back({s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>()});
    for (const auto& t : j.at("tokens")) {
      r.tokens.push_back({t.at(0).get<std::string>(), t.at(1).get<std::string>(), t.at(2).get<std::size_t>(),
                          t.at(3).get<std::size_t>(), t.at(4).get<int>(), t.at(5).get<bool>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw DependencyError(std::string("malformed core features: ") + e.what());
  }
  return r;
}

std::string composite_text(std::string_view title, std::string_view body) {
  std::string out;
  out.reserve(title.size() + body.size() + 1);
  out.append(title);
  out.push_back('\n');
  out.append(body);
  return out;
}

void LemmaTable::add(std::string_view form, std::string_view lemma) {
  std::string key = to_lower(nfkc(form));
  if (key.empty()) return;
  table_[std::move(key)] = to_lower(nfkc(lemma));
}

LemmaTable LemmaTable::load_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open lemma table " + path);
  LemmaTable t;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw ConfigError(path + ":" + std::to_string(lineno) + ": expected form<TAB>lemma");
    t.add(std::string_view(line).substr(0, tab), std::string_view(line).substr(tab + 1));
  }
  return t;
}

std::string LemmaTable::lemma(std::string_view form) const {
  std::string key = to_lower(form);
  auto it = table_.find(key);
  return it == table_.end() ? key : it->second;
}

const std::unordered_set<std::string>& default_abbreviations() {
  static const std::unordered_set<std::string> kAbbreviations{
      "dr", "mr", "mrs", "ms", "prof", "doc", "ing", "sv", "npr", "tj", "itd", "itsl", "sl", "god", "st",
      "br", "str", "tzv", "odn", "usp", "vs", "pok", "gosp", "gđa", "gđica", "mag", "dipl", "min", "max",
      "hrv", "engl", "njem", "lat", "no", "jr", "sr", "etc", "e.g", "i.e", "t", "h", "mil", "mlrd", "kn"};
  return kAbbreviations;
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  tokenize_into(text, 0, out);
  return out;
}

CoreResult core_analyze(std::string_view title, std::string_view body, const LemmaTable& lemmas) {
  CoreResult r;
  std::vector<Token> title_tokens;
  tokenize_into(title, 0, title_tokens);
  const std::size_t body_base = codepoint_length(title) + 1;
  std::vector<Token> body_tokens;
  tokenize_into(body, body_base, body_tokens);

  int sentence = 0;
  if (!title_tokens.empty()) {
    for (auto& t : title_tokens) t.sentence_index = sentence;
    r.sentences.push_back({title_tokens.front().start, title_tokens.back().end});
    ++sentence;
  }
  const auto& abbreviations = default_abbreviations();
  std::size_t sentence_start = 0;
  for (std::size_t i = 0; i < body_tokens.size(); ++i) {
    body_tokens[i].sentence_index = sentence;
    const std::string& text = body_tokens[i].text;
    bool last = i + 1 == body_tokens.size();
    bool ends = false;
    if (is_terminal(text)) {
      ends = true;
      if (text == "." && i > sentence_start) {
        std::string prev = to_lower(body_tokens[i - 1].text);
        bool adjacent = body_tokens[i - 1].end == body_tokens[i].start;
        if (adjacent && abbreviations.count(prev)) ends = false;
        if (adjacent && all_digits(prev) && !last && starts_lowercase(body_tokens[i + 1].text)) ends = false;
      }
      // A run of terminal marks or closing quotes stays with its sentence.
      while (ends && !last && (is_terminal(body_tokens[i + 1].text) || body_tokens[i + 1].text == "\"" ||
                               body_tokens[i + 1].text == "”" || body_tokens[i + 1].text == ")")) {
        ++i;
        body_tokens[i].sentence_index = sentence;
        last = i + 1 == body_tokens.size();
      }
    }
    if (ends || last) {
      r.sentences.push_back({body_tokens[sentence_start].start, body_tokens[i].end});
      sentence_start = i + 1;
      ++sentence;
    }
  }

  r.tokens = std::move(title_tokens);
  r.tokens.insert(r.tokens.end(), std::make_move_iterator(body_tokens.begin()),
                  std::make_move_iterator(body_tokens.end()));
  for (auto& t : r.tokens) t.lemma = lemmas.lemma(t.text);
  return r;
}

}  // namespace retriever::analyzers
