#include "retriever/analyzers/linear.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "retriever/common/error.hpp"
#include "retriever/common/hash.hpp"
#include "retriever/common/text.hpp"

namespace retriever::analyzers {
namespace {

constexpr std::uint64_t kFeatureSeed = 0xFEA7u;

SparseVector finish(const std::map<std::uint32_t, float>& counts) {
  SparseVector v(counts.begin(), counts.end());
  double norm = 0.0;
  for (const auto& [i, x] : v) norm += static_cast<double>(x) * x;
  if (norm > 0.0) {
    const double inv = 1.0 / std::sqrt(norm);
    for (auto& [i, x] : v) x = static_cast<float>(x * inv);
  }
  return v;
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

SparseVector char_trigram_features(std::string_view text, std::uint32_t buckets) {
  std::u32string cps = U" " + to_u32(normalize_key(text)) + U" ";
  std::map<std::uint32_t, float> counts;
  for (std::size_t i = 0; i + 3 <= cps.size(); ++i) {
    std::string gram = to_utf8(cps.substr(i, 3));
    counts[static_cast<std::uint32_t>(hash64(gram, kFeatureSeed) % buckets)] += 1.0f;
  }
  return finish(counts);
}

SparseVector term_features(const std::vector<std::string>& terms, std::uint32_t buckets) {
  std::map<std::uint32_t, float> counts;
  auto bump = [&](const std::string& key, float w) {
    counts[static_cast<std::uint32_t>(hash64(key, kFeatureSeed) % buckets)] += w;
  };
  for (const auto& term : terms) {
    bump(term, 1.0f);
    std::u32string cps = to_u32(term);
    for (std::size_t n : {4u, 5u}) {
      if (cps.size() > n) bump("\x1f" + to_utf8(cps.substr(0, n)), 0.5f);
    }
  }
  return finish(counts);
}

LogisticModel LogisticModel::train(const std::vector<SparseVector>& x, const std::vector<bool>& y,
                                   std::uint32_t buckets, const TrainOptions& options) {
  if (x.size() != y.size()) throw Rejected("feature and label counts differ");
  if (buckets == 0) throw Rejected("zero feature buckets");
  LogisticModel m(buckets);
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(options.seed);
  double positive_weight = 1.0, negative_weight = 1.0;
  if (options.balance_classes) {
    auto pos = static_cast<double>(std::count(y.begin(), y.end(), true));
    auto neg = static_cast<double>(y.size()) - pos;
    if (pos > 0 && neg > 0) {
      positive_weight = static_cast<double>(y.size()) / (2.0 * pos);
      negative_weight = static_cast<double>(y.size()) / (2.0 * neg);
    }
  }
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = options.learning_rate / (1.0 + 0.1 * epoch);
    for (std::size_t k : order) {
      double g = (m.probability(x[k]) - (y[k] ? 1.0 : 0.0)) * (y[k] ? positive_weight : negative_weight);
      for (const auto& [i, v] : x[k]) {
        if (i >= buckets) throw Rejected("feature index out of range");
        m.weights_[i] -= static_cast<float>(lr * (g * v + options.l2 * m.weights_[i]));
      }
      m.bias_ -= lr * g;
    }
  }
  return m;
}

double LogisticModel::probability(const SparseVector& x) const {
  double z = bias_;
  for (const auto& [i, v] : x) {
    if (i < weights_.size()) z += static_cast<double>(weights_[i]) * v;
  }
  return sigmoid(z);
}

nlohmann::json LogisticModel::to_json() const {
  nlohmann::json idx = nlohmann::json::array(), val = nlohmann::json::array();
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (weights_[i] != 0.0f) {
      idx.push_back(i);
      val.push_back(weights_[i]);
    }
  }
  return {{"buckets", weights_.size()}, {"bias", bias_}, {"index", std::move(idx)}, {"weight", std::move(val)}};
}

LogisticModel LogisticModel::from_json(const nlohmann::json& j) {
  try {
    LogisticModel m(j.at("buckets").get<std::uint32_t>());
    m.bias_ = j.at("bias").get<double>();
    const auto& idx = j.at("index");
    const auto& val = j.at("weight");
    if (idx.size() != val.size()) throw ConfigError("model index/weight length mismatch");
    for (std::size_t k = 0; k < idx.size(); ++k) {
      auto i = idx[k].get<std::size_t>();
      if (i >= m.weights_.size()) throw ConfigError("model weight index out of range");
      m.weights_[i] = val[k].get<float>();
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed linear model: ") + e.what());
  }
}

}  // namespace retriever::analyzers
