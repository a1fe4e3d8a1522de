#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "retriever/analyzers/linear.hpp"

namespace retriever::analyzers {

// Articles with fewer tokens than this (title and body, punctuation
// included) are hidden without consulting the classifier.
inline constexpr std::size_t kMinQualityTokens = 50;

class QualityClassifier {
 public:
  virtual ~QualityClassifier() = default;
  virtual bool is_low_quality(std::string_view title, std::string_view body) const = 0;
};

struct QualityExample {
  std::string title;
  std::string body;
  bool low_quality = false;
};

// JSON-lines: {"title": ..., "body": ..., "low_quality": true|false}.
std::vector<QualityExample> load_quality_examples(const std::string& path);

// Logistic regression over hashed character trigrams of title + body.
class LinearQualityClassifier final : public QualityClassifier {
 public:
  explicit LinearQualityClassifier(LogisticModel model, double threshold = 0.5)
      : model_(std::move(model)), threshold_(threshold) {}

  static LinearQualityClassifier train(const std::vector<QualityExample>& examples,
                                       std::uint32_t buckets = kDefaultFeatureBuckets, const TrainOptions& options = {});
  static LinearQualityClassifier load(const std::string& path);
  void save(const std::string& path) const;

  double probability(std::string_view title, std::string_view body) const;
  bool is_low_quality(std::string_view title, std::string_view body) const override;

 private:
  LogisticModel model_;
  double threshold_;
};

enum class QualityReason { too_short, classifier, none };
std::string to_string(QualityReason r);

struct QualityVerdict {
  bool hidden = false;
  QualityReason reason = QualityReason::none;
};

// Throws DependencyError when the classifier is needed but null.
QualityVerdict low_quality_analyze(std::size_t token_count, std::string_view title, std::string_view body,
                                   const QualityClassifier* classifier);

struct QualityReport {
  std::size_t total = 0;
  std::size_t too_short = 0;
  std::size_t flagged = 0;  // hidden by the classifier

  void add(const QualityVerdict& v);
  std::size_t hidden() const { return too_short + flagged; }
  double hidden_rate() const { return total == 0 ? 0.0 : static_cast<double>(hidden()) / static_cast<double>(total); }
};

}  // namespace retriever::analyzers
