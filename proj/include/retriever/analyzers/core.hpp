#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

namespace retriever::analyzers {

// Offsets are code points into composite_text(title, body).
struct Token {
  std::string text;
  std::string lemma;
  std::size_t start = 0;
  std::size_t end = 0;
  int sentence_index = 0;
  bool is_alpha = false;  // contains at least one letter

  bool operator==(const Token&) const = default;
};

struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  bool operator==(const Span&) const = default;
};

struct CoreResult {
  std::vector<Span> sentences;
  std::vector<Token> tokens;

  nlohmann::json to_json() const;
  static CoreResult from_json(const nlohmann::json& j);
};

std::string composite_text(std::string_view title, std::string_view body);

// Word form -> lemma. Keys and values are stored lowercased; lookups are
// case-insensitive and fall back to the lowercased form.
class LemmaTable {
 public:
  void add(std::string_view form, std::string_view lemma);
  // UTF-8 TSV "form<TAB>lemma"; blank lines and lines starting with '#'
  // are skipped.
  static LemmaTable load_tsv(const std::string& path);

  std::string lemma(std::string_view form) const;
  std::size_t size() const { return table_.size(); }

 private:
  std::unordered_map<std::string, std::string> table_;
};

// Lowercase tokens after which a period does not end a sentence.
const std::unordered_set<std::string>& default_abbreviations();

// Tokens are Unicode word-break segments that are not whitespace, so
// punctuation marks are tokens of their own. The title is always its own
// sentence. In the body a sentence ends after ".", "!", "?" or "…" unless
// the period follows an abbreviation, or follows a number and the next
// token starts with a lowercase letter (ordinals and dates: "5. svibnja").
CoreResult core_analyze(std::string_view title, std::string_view body, const LemmaTable& lemmas);

// Tokenization only, offsets relative to `text`, sentence_index 0, lemma empty.
std::vector<Token> tokenize(std::string_view text);

}  // namespace retriever::analyzers
