#pragma once

#include <bit>
#include <cstdint>
#include <string_view>

namespace retriever::extract {

inline constexpr std::uint64_t kSimhashSeed = 0x5EED'7A6E'5EED'7A6EULL;

// 64-bit SimHash over overlapping trigrams of the lowercased alphanumeric
// code points of title followed by body. Fewer than three such code points
// give 0.
std::uint64_t compute_simhash(std::string_view title, std::string_view body);

inline int hamming_distance(std::uint64_t a, std::uint64_t b) { return std::popcount(a ^ b); }

}  // namespace retriever::extract
