#include "retriever/analyzers/topics.hpp"

#include <fstream>

#include "retriever/common/error.hpp"

namespace retriever::analyzers {

std::optional<std::size_t> topic_index(std::string_view label) {
  for (std::size_t i = 0; i < kTopicLabels.size(); ++i) {
    if (kTopicLabels[i] == label) return i;
  }
  return std::nullopt;
}

std::vector<TopicExample> load_topic_examples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::vector<TopicExample> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto where = path + ":" + std::to_string(lineno) + ": ";
    try {
      auto j = nlohmann::json::parse(line);
      TopicExample e{j.value("title", ""), j.at("body").get<std::string>(), j.at("labels").get<std::vector<std::string>>()};
      for (const auto& l : e.labels) {
        if (!is_topic_label(l)) throw ConfigError(where + "unknown topic label \"" + l + "\"");
      }
      out.push_back(std::move(e));
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(where + e.what());
    }
  }
  return out;
}

TopicModel TopicModel::train(const std::vector<std::vector<std::string>>& terms,
                             const std::vector<std::vector<std::string>>& labels, std::uint32_t buckets,
                             const TrainOptions& options) {
  if (terms.size() != labels.size()) throw Rejected("term and label counts differ");
  std::vector<SparseVector> x;
  for (const auto& t : terms) x.push_back(term_features(t, buckets));
  std::vector<std::vector<bool>> y(kTopicCount, std::vector<bool>(terms.size(), false));
  for (std::size_t k = 0; k < labels.size(); ++k) {
    for (const auto& l : labels[k]) {
      auto i = topic_index(l);
      if (!i) throw Rejected("unknown topic label \"" + l + "\"");
      y[*i][k] = true;
    }
  }
  TopicModel m;
  m.buckets_ = buckets;
  for (std::size_t i = 0; i < kTopicCount; ++i) {
    TrainOptions o = options;
    o.seed = options.seed + i;
    o.balance_classes = true;
    m.models_.push_back(LogisticModel::train(x, y[i], buckets, o));
  }
  return m;
}

TopicModel TopicModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open topic model " + path);
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || j.value("kind", "") != "topics") throw ConfigError(path + ": not a topic model");
  TopicModel m;
  m.buckets_ = j.at("buckets").get<std::uint32_t>();
  const auto& per_label = j.at("labels");
  for (auto label : kTopicLabels) {
    std::string key(label);
    if (!per_label.contains(key)) throw ConfigError(path + ": missing scorer for " + key);
    m.models_.push_back(LogisticModel::from_json(per_label[key]));
  }
  return m;
}

void TopicModel::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  nlohmann::json per_label = nlohmann::json::object();
  for (std::size_t i = 0; i < kTopicCount; ++i) per_label[std::string(kTopicLabels[i])] = models_[i].to_json();
  out << nlohmann::json{{"kind", "topics"}, {"buckets", buckets_}, {"labels", std::move(per_label)}}.dump();
}

std::array<double, kTopicCount> TopicModel::scores(const std::vector<std::string>& terms) const {
  auto x = term_features(terms, buckets_);
  std::array<double, kTopicCount> out{};
  for (std::size_t i = 0; i < kTopicCount; ++i) out[i] = models_[i].probability(x);
  return out;
}

std::vector<std::string> TopicModel::predict(const std::vector<std::string>& terms) const {
  auto s = scores(terms);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < kTopicCount; ++i) {
    if (s[i] >= kThreshold) out.emplace_back(kTopicLabels[i]);
  }
  return out;
}

}  // namespace retriever::analyzers
