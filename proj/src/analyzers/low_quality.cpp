#include "retriever/analyzers/low_quality.hpp"

#include <fstream>

#include "retriever/common/error.hpp"

namespace retriever::analyzers {
namespace {

std::string joined(std::string_view title, std::string_view body) {
  std::string s(title);
  s += ' ';
  s += body;
  return s;
}

}  // namespace

std::vector<QualityExample> load_quality_examples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::vector<QualityExample> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      out.push_back({j.value("title", ""), j.at("body").get<std::string>(), j.at("low_quality").get<bool>()});
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

LinearQualityClassifier LinearQualityClassifier::train(const std::vector<QualityExample>& examples,
                                                       std::uint32_t buckets, const TrainOptions& options) {
  std::vector<SparseVector> x;
  std::vector<bool> y;
  for (const auto& e : examples) {
    x.push_back(char_trigram_features(joined(e.title, e.body), buckets));
    y.push_back(e.low_quality);
  }
  return LinearQualityClassifier(LogisticModel::train(x, y, buckets, options));
}

LinearQualityClassifier LinearQualityClassifier::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open low-quality model " + path);
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || j.value("kind", "") != "low_quality") throw ConfigError(path + ": not a low-quality model");
  return LinearQualityClassifier(LogisticModel::from_json(j.at("model")), j.value("threshold", 0.5));
}

void LinearQualityClassifier::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << nlohmann::json{{"kind", "low_quality"}, {"threshold", threshold_}, {"model", model_.to_json()}}.dump();
}

double LinearQualityClassifier::probability(std::string_view title, std::string_view body) const {
  return model_.probability(char_trigram_features(joined(title, body), model_.buckets()));
}

bool LinearQualityClassifier::is_low_quality(std::string_view title, std::string_view body) const {
  return probability(title, body) >= threshold_;
}

std::string to_string(QualityReason r) {
  switch (r) {
    case QualityReason::too_short: return "too_short";
    case QualityReason::classifier: return "classifier";
    case QualityReason::none: return "none";
  }
  return "?";
}

QualityVerdict low_quality_analyze(std::size_t token_count, std::string_view title, std::string_view body,
                                   const QualityClassifier* classifier) {
  if (token_count < kMinQualityTokens) return {true, QualityReason::too_short};
  if (!classifier) throw DependencyError("low-quality classifier not loaded");
  if (classifier->is_low_quality(title, body)) return {true, QualityReason::classifier};
  return {false, QualityReason::none};
}

void QualityReport::add(const QualityVerdict& v) {
  ++total;
  if (v.reason == QualityReason::too_short) ++too_short;
  if (v.reason == QualityReason::classifier) ++flagged;
}

}  // namespace retriever::analyzers
