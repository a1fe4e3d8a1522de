#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "retriever/analyzers/linear.hpp"

namespace retriever::analyzers {

inline constexpr std::size_t kTopicCount = 17;
inline constexpr std::array<std::string_view, kTopicCount> kTopicLabels{
    "SPORT",
    "HOBBY AND PERSONAL INTEREST",
    "POLITICS",
    "CRIME, LAW AND JUSTICE",
    "ECONOMY, BUSINESS AND FINANCE",
    "DISASTER, ACCIDENT AND EMERGENCY INCIDENT",
    "HEALTH",
    "ARTS, CULTURE, ENTERTAINMENT AND MEDIA",
    "CONFLICTS, WAR AND PEACE",
    "SCIENCE AND TECHNOLOGY",
    "ENVIRONMENT",
    "EDUCATION",
    "WEATHER",
    "RELIGION",
    "LIFESTYLE AND LEISURE",
    "LABOUR",
    "SOCIETY",
};

std::optional<std::size_t> topic_index(std::string_view label);
inline bool is_topic_label(std::string_view label) { return topic_index(label).has_value(); }

struct TopicExample {
  std::string title;
  std::string body;
  std::vector<std::string> labels;
};

// JSON-lines: {"title": ..., "body": ..., "labels": [...]}. Unknown labels
// are rejected.
std::vector<TopicExample> load_topic_examples(const std::string& path);

// One-vs-rest logistic scorers over hashed lemmas and their 4- and 5-character
// prefixes.
class TopicModel {
 public:
  static constexpr double kThreshold = 0.5;

  // `terms[k]` are the lemmas of example k.
  static TopicModel train(const std::vector<std::vector<std::string>>& terms,
                          const std::vector<std::vector<std::string>>& labels,
                          std::uint32_t buckets = kDefaultFeatureBuckets, const TrainOptions& options = {});
  static TopicModel load(const std::string& path);
  void save(const std::string& path) const;

  std::array<double, kTopicCount> scores(const std::vector<std::string>& terms) const;
  // Labels scoring at least kThreshold, in table order.
  std::vector<std::string> predict(const std::vector<std::string>& terms) const;

 private:
  std::uint32_t buckets_ = kDefaultFeatureBuckets;
  std::vector<LogisticModel> models_;  // one per label
};

}  // namespace retriever::analyzers
