#include "retriever/analyzers/modules.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include "retriever/common/error.hpp"
#include "retriever/common/text.hpp"

namespace retriever::analyzers {

using pipeline::upstream;

nlohmann::json CoreAnalyzer::analyze(const store::Article& article, const nlohmann::json&) const {
  return core_analyze(article.title, article.body, *lemmas_).to_json();
}

nlohmann::json NerAnalyzer::analyze(const store::Article& article, const nlohmann::json& features) const {
  auto core = CoreResult::from_json(upstream(features, "core"));
  if (!gazetteer_) throw DependencyError("gazetteer not loaded");
  auto composite = to_u32(composite_text(article.title, article.body));
  nlohmann::json mentions = nlohmann::json::array();
  for (const auto& m : ner_analyze(core.tokens, composite, *gazetteer_)) mentions.push_back(m.to_json());
  return {{"mentions", std::move(mentions)}};
}

nlohmann::json NelAnalyzer::analyze(const store::Article&, const nlohmann::json& features) const {
  upstream(features, "core");
  const auto& ner = upstream(features, "ner");
  if (!kb_) throw DependencyError("knowledge base not loaded");
  std::vector<nel::MentionQuery> queries;
  for (const auto& m : ner.at("mentions")) {
    auto mention = EntityMention::from_json(m);
    queries.push_back({mention.lemma_key, mention.ner_type});
  }
  auto result = nel::link(queries, *kb_, options_);
  nlohmann::json links = nlohmann::json::array();
  std::set<std::string> entities;
  for (const auto& a : result.assignments) {
    nlohmann::json kb_id = nullptr;
    if (a.kb_id) {
      kb_id = *a.kb_id;
      entities.insert(*a.kb_id);
    }
    links.push_back({{"mention", a.mention_index}, {"kb_id", kb_id}, {"score_trace", a.score_trace}});
  }
  return {{"links", std::move(links)}, {"entities", entities}, {"passes", result.passes}};
}

nlohmann::json LowQualityAnalyzer::analyze(const store::Article& article, const nlohmann::json& features) const {
  const auto& core = upstream(features, "core");
  std::size_t count = core.at("tokens").size();
  auto verdict = low_quality_analyze(count, article.title, article.body, classifier_.get());
  return {{"hidden", verdict.hidden}, {"reason", to_string(verdict.reason)}, {"token_count", count}};
}

std::vector<std::string> topic_terms(const CoreResult& core) {
  std::vector<std::string> out;
  for (const auto& t : core.tokens) {
    if (t.is_alpha) out.push_back(t.lemma);
  }
  return out;
}

nlohmann::json TopicsAnalyzer::analyze(const store::Article&, const nlohmann::json& features) const {
  auto core = CoreResult::from_json(upstream(features, "core"));
  if (!model_) throw DependencyError("topic model not loaded");
  return nlohmann::json{{"labels", model_->predict(topic_terms(core))}};
}

AnalyzerConfig AnalyzerConfig::from_json(const nlohmann::json& j) {
  AnalyzerConfig c;
  try {
    c.lemma_table = j.value("lemma_table", "");
    c.gazetteer = j.value("gazetteer", "");
    c.knowledge_base = j.value("knowledge_base", "");
    c.low_quality_model = j.value("low_quality_model", "");
    c.topic_model = j.value("topic_model", "");
    c.strict_types = j.value("strict_types", false);
    if (j.contains("versions")) c.versions = j["versions"].get<std::map<std::string, int>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("invalid analyzer config: ") + e.what());
  }
  return c;
}

AnalyzerConfig AnalyzerConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read analyzer config " + path);
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ConfigError(path + ": not a JSON object");
  auto c = from_json(j);
  auto base = std::filesystem::path(path).parent_path();
  for (auto* p : {&c.lemma_table, &c.gazetteer, &c.knowledge_base, &c.low_quality_model, &c.topic_model}) {
    if (!p->empty() && std::filesystem::path(*p).is_relative()) *p = (base / *p).lexically_normal().string();
  }
  return c;
}

Artifacts Artifacts::load(const AnalyzerConfig& config) {
  Artifacts a;
  if (!config.lemma_table.empty()) a.lemmas = std::make_shared<LemmaTable>(LemmaTable::load_tsv(config.lemma_table));
  if (!config.gazetteer.empty()) a.gazetteer = std::make_shared<Gazetteer>(Gazetteer::load_tsv(config.gazetteer));
  if (!config.knowledge_base.empty()) {
    a.kb = std::make_shared<nel::KnowledgeBase>(nel::KnowledgeBase::load_jsonl(config.knowledge_base));
  }
  if (!config.low_quality_model.empty()) {
    a.quality = std::make_shared<LinearQualityClassifier>(LinearQualityClassifier::load(config.low_quality_model));
  }
  if (!config.topic_model.empty()) a.topics = std::make_shared<TopicModel>(TopicModel::load(config.topic_model));
  return a;
}

std::shared_ptr<pipeline::Pipeline> default_pipeline(const Artifacts& artifacts, const AnalyzerConfig& config) {
  auto version = [&](const std::string& name) {
    auto it = config.versions.find(name);
    return it == config.versions.end() ? 1 : it->second;
  };
  nel::LinkOptions link_options;
  link_options.strict_types = config.strict_types;
  auto p = std::make_shared<pipeline::Pipeline>();
  p->add({"core", {}, version("core"), std::make_shared<CoreAnalyzer>(artifacts.lemmas)});
  p->add({"ner", {"core"}, version("ner"), std::make_shared<NerAnalyzer>(artifacts.gazetteer)});
  p->add({"nel", {"core", "ner"}, version("nel"), std::make_shared<NelAnalyzer>(artifacts.kb, link_options)});
  p->add({"low_quality", {"core"}, version("low_quality"), std::make_shared<LowQualityAnalyzer>(artifacts.quality)});
  p->add({"topics", {"core"}, version("topics"), std::make_shared<TopicsAnalyzer>(artifacts.topics)});
  return p;
}

}  // namespace retriever::analyzers
