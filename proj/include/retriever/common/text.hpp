#pragma once

#include <cstddef>
#include <string>
#include <string_view>

namespace retriever {

bool is_valid_utf8(std::string_view s);

// Unicode NFKC form. Invalid UTF-8 sequences are replaced with U+FFFD.
std::string nfkc(std::string_view s);

// NFKC, then every run of Unicode whitespace becomes one ASCII space, then
// leading/trailing whitespace is trimmed.
std::string normalize_text(std::string_view s);

// Full Unicode lowercase (root locale).
std::string to_lower(std::string_view s);

// Lookup key used for aliases, gazetteer entries and lemma keys:
// normalize_text + lowercase.
std::string normalize_key(std::string_view s);

std::u32string to_u32(std::string_view utf8);
std::string to_utf8(std::u32string_view s);
void append_utf8(std::string& out, char32_t cp);

// Number of code points.
std::size_t codepoint_length(std::string_view utf8);

bool is_alnum(char32_t cp);
bool is_space(char32_t cp);
char32_t simple_lower(char32_t cp);

}  // namespace retriever
