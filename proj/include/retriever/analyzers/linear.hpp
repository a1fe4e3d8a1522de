#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

namespace retriever::analyzers {

// Sorted by index, no repeated indices, L2-normalized.
using SparseVector = std::vector<std::pair<std::uint32_t, float>>;

inline constexpr std::uint32_t kDefaultFeatureBuckets = 1u << 18;

// Character trigrams of normalize_key(text) padded with a space on both
// sides, hashed into `buckets`.
SparseVector char_trigram_features(std::string_view text, std::uint32_t buckets = kDefaultFeatureBuckets);

// Each term plus its 4- and 5-code-point prefixes (a crude stemmer that
// survives inflection the lemma table misses), hashed into `buckets`.
SparseVector term_features(const std::vector<std::string>& terms, std::uint32_t buckets = kDefaultFeatureBuckets);

struct TrainOptions {
  int epochs = 20;
  double learning_rate = 0.5;
  double l2 = 1e-5;
  std::uint64_t seed = 1;
  // Weight examples so both classes carry equal total weight.
  bool balance_classes = false;
};

// Binary logistic regression over hashed features.
class LogisticModel {
 public:
  LogisticModel() = default;
  explicit LogisticModel(std::uint32_t buckets) : weights_(buckets, 0.0f) {}

  // Plain SGD over a seeded shuffle; identical inputs give identical models.
  static LogisticModel train(const std::vector<SparseVector>& x, const std::vector<bool>& y, std::uint32_t buckets,
                             const TrainOptions& options = {});

  double probability(const SparseVector& x) const;
  std::uint32_t buckets() const { return static_cast<std::uint32_t>(weights_.size()); }

  // Only non-zero weights are written.
  nlohmann::json to_json() const;
  static LogisticModel from_json(const nlohmann::json& j);

 private:
  std::vector<float> weights_;
  double bias_ = 0.0;
};

}  // namespace retriever::analyzers
