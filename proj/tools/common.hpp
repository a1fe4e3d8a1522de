#pragma once

// Shared plumbing of the command-line tools: one data directory holds the
// broker, article and crawl databases.

#include <filesystem>
#include <iostream>
#include <memory>
#include <string>

#include <json.hpp>

#include "retriever/analyzers/modules.hpp"
#include "retriever/broker/broker.hpp"
#include "retriever/common/error.hpp"
#include "retriever/crawl/scheduler.hpp"
#include "retriever/pipeline/runner.hpp"
#include "retriever/store/article_store.hpp"

namespace retriever::tools {

struct DataDir {
  std::filesystem::path root;

  explicit DataDir(const std::string& dir) : root(dir) { std::filesystem::create_directories(root); }
  std::string file(const char* name) const { return (root / name).string(); }

  std::shared_ptr<broker::Broker> broker() const { return std::make_shared<broker::Broker>(file("broker.db")); }
  std::shared_ptr<store::ArticleStore> store() const {
    return std::make_shared<store::ArticleStore>(file("articles.db"));
  }
  std::shared_ptr<crawl::Scheduler> scheduler(std::shared_ptr<broker::Broker> b) const {
    return std::make_shared<crawl::Scheduler>(file("crawl.db"), std::move(b));
  }
};

inline analyzers::AnalyzerConfig analyzer_config(const std::string& path) {
  return path.empty() ? analyzers::AnalyzerConfig{} : analyzers::AnalyzerConfig::load_file(path);
}

// A runner over the default module DAG. Artifacts are loaded only when the
// caller is going to analyze; version bookkeeping needs none.
inline std::shared_ptr<pipeline::PipelineRunner> make_runner(const analyzers::AnalyzerConfig& config,
                                                             bool load_artifacts,
                                                             std::shared_ptr<store::ArticleStore> store,
                                                             std::shared_ptr<broker::Broker> broker) {
  auto artifacts = load_artifacts ? analyzers::Artifacts::load(config) : analyzers::Artifacts{};
  return std::make_shared<pipeline::PipelineRunner>(analyzers::default_pipeline(artifacts, config), std::move(store),
                                                    std::move(broker));
}

// Runs a subcommand body, mapping library errors to exit code 1.
template <typename F>
int guarded(F&& f) {
  try {
    f();
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
  }
  return 1;
}

inline void print(const nlohmann::json& j) { std::cout << j.dump(2) << "\n"; }

}  // namespace retriever::tools
