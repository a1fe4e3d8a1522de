#include "retriever/extract/simhash.hpp"

#include <array>
#include <string>
#include <vector>

#include "retriever/common/hash.hpp"
#include "retriever/common/text.hpp"

namespace retriever::extract {
namespace {

void append_filtered(std::u32string& out, std::string_view text) {
  for (char32_t cp : to_u32(text)) {
    if (is_alnum(cp)) out.push_back(simple_lower(cp));
  }
}

}  // namespace

std::uint64_t compute_simhash(std::string_view title, std::string_view body) {
  std::u32string chars;
  append_filtered(chars, title);
  append_filtered(chars, body);
  if (chars.size() < 3) return 0;

  std::array<std::int64_t, 64> votes{};
  std::string gram;
  for (std::size_t i = 0; i + 3 <= chars.size(); ++i) {
    gram.clear();
    for (std::size_t k = 0; k < 3; ++k) append_utf8(gram, chars[i + k]);
    std::uint64_t h = hash64(gram, kSimhashSeed);
    for (int bit = 0; bit < 64; ++bit) votes[bit] += (h >> bit) & 1 ? 1 : -1;
  }
  std::uint64_t out = 0;
  for (int bit = 0; bit < 64; ++bit) {
    if (votes[bit] >= 0) out |= 1ULL << bit;
  }
  return out;
}

}  // namespace retriever::extract
