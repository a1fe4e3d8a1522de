#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "retriever/analyzers/core.hpp"
#include "retriever/analyzers/low_quality.hpp"
#include "retriever/analyzers/ner.hpp"
#include "retriever/analyzers/topics.hpp"
#include "retriever/nel/solver.hpp"
#include "retriever/pipeline/pipeline.hpp"

namespace retriever::analyzers {

// Feature payloads, one per module:
//   core:        {"sentences": [[s, e]...], "tokens": [[text, lemma, s, e, sentence, is_alpha]...]}
//   ner:         {"mentions": [EntityMention...]}
//   nel:         {"links": [{"mention", "kb_id" | null, "score_trace"}...], "entities": [kb_id...], "passes"}
//   low_quality: {"hidden", "reason", "token_count"}
//   topics:      {"labels": [...]}

class CoreAnalyzer final : public pipeline::Analyzer {
 public:
  explicit CoreAnalyzer(std::shared_ptr<const LemmaTable> lemmas) : lemmas_(std::move(lemmas)) {}
  nlohmann::json analyze(const store::Article& article, const nlohmann::json& features) const override;

 private:
  std::shared_ptr<const LemmaTable> lemmas_;
};

class NerAnalyzer final : public pipeline::Analyzer {
 public:
  explicit NerAnalyzer(std::shared_ptr<const Gazetteer> gazetteer) : gazetteer_(std::move(gazetteer)) {}
  nlohmann::json analyze(const store::Article& article, const nlohmann::json& features) const override;

 private:
  std::shared_ptr<const Gazetteer> gazetteer_;
};

class NelAnalyzer final : public pipeline::Analyzer {
 public:
  NelAnalyzer(std::shared_ptr<const nel::KnowledgeBase> kb, nel::LinkOptions options)
      : kb_(std::move(kb)), options_(options) {}
  nlohmann::json analyze(const store::Article& article, const nlohmann::json& features) const override;

 private:
  std::shared_ptr<const nel::KnowledgeBase> kb_;
  nel::LinkOptions options_;
};

class LowQualityAnalyzer final : public pipeline::Analyzer {
 public:
  explicit LowQualityAnalyzer(std::shared_ptr<const QualityClassifier> classifier)
      : classifier_(std::move(classifier)) {}
  nlohmann::json analyze(const store::Article& article, const nlohmann::json& features) const override;

 private:
  std::shared_ptr<const QualityClassifier> classifier_;
};

class TopicsAnalyzer final : public pipeline::Analyzer {
 public:
  explicit TopicsAnalyzer(std::shared_ptr<const TopicModel> model) : model_(std::move(model)) {}
  nlohmann::json analyze(const store::Article& article, const nlohmann::json& features) const override;

 private:
  std::shared_ptr<const TopicModel> model_;
};

// Lemmas of the alphabetic tokens, the input of the topic model.
std::vector<std::string> topic_terms(const CoreResult& core);

// Artifact paths; an empty path leaves the artifact unloaded, and the
// module that needs it fails with DependencyError. An unreadable path is a
// ConfigError at load time. The lemma table is optional.
struct AnalyzerConfig {
  std::string lemma_table;
  std::string gazetteer;
  std::string knowledge_base;
  std::string low_quality_model;
  std::string topic_model;
  bool strict_types = false;
  std::map<std::string, int> versions;  // module -> version, default 1

  static AnalyzerConfig from_json(const nlohmann::json& j);
  // Reads a JSON file; relative artifact paths resolve against its directory.
  static AnalyzerConfig load_file(const std::string& path);
};

struct Artifacts {
  std::shared_ptr<const LemmaTable> lemmas = std::make_shared<LemmaTable>();
  std::shared_ptr<const Gazetteer> gazetteer;
  std::shared_ptr<const nel::KnowledgeBase> kb;
  std::shared_ptr<const QualityClassifier> quality;
  std::shared_ptr<const TopicModel> topics;

  static Artifacts load(const AnalyzerConfig& config);
};

// core; ner(core); nel(core, ner); low_quality(core); topics(core).
std::shared_ptr<pipeline::Pipeline> default_pipeline(const Artifacts& artifacts, const AnalyzerConfig& config = {});

}  // namespace retriever::analyzers
