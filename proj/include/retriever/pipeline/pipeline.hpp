#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "retriever/store/article_store.hpp"

namespace retriever::pipeline {

// One analysis step. `features` holds the records produced so far for this
// article, keyed by module name: {"<module>": {"data": ..., "version": n}}.
// Implementations read only the records of their declared dependencies and
// throw DependencyError when one is missing.
class Analyzer {
 public:
  virtual ~Analyzer() = default;
  virtual nlohmann::json analyze(const store::Article& article, const nlohmann::json& features) const = 0;
};

// The `data` of a dependency's record; throws DependencyError when absent.
const nlohmann::json& upstream(const nlohmann::json& features, std::string_view module);

struct ModuleSpec {
  std::string name;
  std::vector<std::string> depends_on;
  int version = 1;
  std::shared_ptr<const Analyzer> analyzer;
};

struct ProcessResult {
  nlohmann::json features;
  std::vector<std::string> executed;  // in execution order
};

// The module DAG. Not thread-safe for registration; const methods may be
// called concurrently.
class Pipeline {
 public:
  // Rejects duplicates, unknown dependencies (which also rules out cycles)
  // and non-positive versions.
  void add(ModuleSpec spec);

  // Topological order, ties broken by registration order.
  const std::vector<std::string>& order() const { return order_; }
  bool has(std::string_view name) const;
  const ModuleSpec& spec(std::string_view name) const;

  int version(std::string_view name) const;
  void set_version(std::string_view name, int version);

  // `changed` and everything that depends on it, in topological order.
  std::vector<std::string> affected_set(std::string_view changed) const;

  // Modules whose stored record is missing or has another version, plus
  // their dependents, in topological order.
  std::vector<std::string> stale_set(const nlohmann::json& features) const;

  // All modules for an article without features and no starting module;
  // otherwise affected_set(from_module) united with stale_set(features).
  std::vector<std::string> run_set(const nlohmann::json& features, const std::optional<std::string>& from_module) const;

  // Runs the run set in order over a copy of `article.features`. Throws
  // whatever an analyzer throws; the input is never modified.
  ProcessResult process(const store::Article& article, const std::optional<std::string>& from_module) const;

 private:
  void recompute_order();
  std::vector<std::string> closure(const std::vector<std::string>& seeds) const;

  std::vector<ModuleSpec> modules_;  // registration order
  std::map<std::string, std::size_t, std::less<>> index_;
  std::vector<std::string> order_;
};

}  // namespace retriever::pipeline
