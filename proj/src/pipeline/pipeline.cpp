#include "retriever/pipeline/pipeline.hpp"

#include <set>

#include "retriever/common/error.hpp"

namespace retriever::pipeline {

const nlohmann::json& upstream(const nlohmann::json& features, std::string_view module) {
  auto it = features.find(std::string(module));
  if (it == features.end() || !it->is_object() || !it->contains("data")) {
    throw DependencyError("missing upstream features: " + std::string(module));
  }
  return (*it)["data"];
}

void Pipeline::add(ModuleSpec spec) {
  if (spec.name.empty()) throw Rejected("module name must not be empty");
  if (index_.count(spec.name)) throw Rejected("duplicate module: " + spec.name);
  if (spec.version <= 0) throw Rejected("module version must be positive: " + spec.name);
  if (!spec.analyzer) throw Rejected("module without analyzer: " + spec.name);
  std::set<std::string> seen;
  for (const auto& dep : spec.depends_on) {
    if (dep == spec.name) throw Rejected("module depends on itself: " + spec.name);
    if (!index_.count(dep)) throw Rejected("unknown dependency " + dep + " of " + spec.name);
    if (!seen.insert(dep).second) throw Rejected("repeated dependency " + dep + " of " + spec.name);
  }
  index_.emplace(spec.name, modules_.size());
  modules_.push_back(std::move(spec));
  recompute_order();
}

void Pipeline::recompute_order() {
  // Kahn's algorithm; among ready modules the earliest registered goes first.
  std::vector<int> indegree(modules_.size(), 0);
  std::vector<std::vector<std::size_t>> dependents(modules_.size());
  for (std::size_t i = 0; i < modules_.size(); ++i) {
    for (const auto& dep : modules_[i].depends_on) {
      dependents[index_.at(dep)].push_back(i);
      ++indegree[i];
    }
  }
  std::set<std::size_t> ready;
  for (std::size_t i = 0; i < modules_.size(); ++i) {
    if (indegree[i] == 0) ready.insert(i);
  }
  order_.clear();
  while (!ready.empty()) {
    std::size_t next = *ready.begin();
    ready.erase(ready.begin());
    order_.push_back(modules_[next].name);
    for (std::size_t d : dependents[next]) {
      if (--indegree[d] == 0) ready.insert(d);
    }
  }
  if (order_.size() != modules_.size()) throw Rejected("module graph has a cycle");
}

bool Pipeline::has(std::string_view name) const { return index_.count(name) > 0; }

const ModuleSpec& Pipeline::spec(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Rejected("unknown module: " + std::string(name));
  return modules_[it->second];
}

int Pipeline::version(std::string_view name) const { return spec(name).version; }

void Pipeline::set_version(std::string_view name, int version) {
  if (version <= 0) throw Rejected("module version must be positive");
  spec(name);
  modules_[index_.find(name)->second].version = version;
}

std::vector<std::string> Pipeline::closure(const std::vector<std::string>& seeds) const {
  std::set<std::string, std::less<>> in(seeds.begin(), seeds.end());
  // Topological order guarantees dependencies are decided first.
  std::vector<std::string> out;
  for (const auto& name : order_) {
    bool include = in.count(name) > 0;
    if (!include) {
      for (const auto& dep : spec(name).depends_on) {
        if (in.count(dep)) {
          include = true;
          break;
        }
      }
    }
    if (include) {
      in.insert(name);
      out.push_back(name);
    }
  }
  return out;
}

std::vector<std::string> Pipeline::affected_set(std::string_view changed) const {
  spec(changed);
  return closure({std::string(changed)});
}

std::vector<std::string> Pipeline::stale_set(const nlohmann::json& features) const {
  std::vector<std::string> stale;
  for (const auto& m : modules_) {
    auto it = features.find(m.name);
    bool current = it != features.end() && it->is_object() && it->contains("version") &&
                   (*it)["version"].is_number_integer() && (*it)["version"].get<int>() == m.version;
    if (!current) stale.push_back(m.name);
  }
  return closure(stale);
}

std::vector<std::string> Pipeline::run_set(const nlohmann::json& features,
                                           const std::optional<std::string>& from_module) const {
  if (!from_module && (!features.is_object() || features.empty())) return order_;
  std::vector<std::string> seeds = stale_set(features);
  if (from_module) {
    spec(*from_module);
    seeds.push_back(*from_module);
  }
  return closure(seeds);
}

ProcessResult Pipeline::process(const store::Article& article, const std::optional<std::string>& from_module) const {
  ProcessResult result;
  result.features = article.features.is_object() ? article.features : nlohmann::json::object();
  for (const auto& name : run_set(result.features, from_module)) {
    const ModuleSpec& m = spec(name);
    nlohmann::json data = m.analyzer->analyze(article, result.features);
    result.features[name] = {{"data", std::move(data)}, {"version", m.version}};
    result.executed.push_back(name);
  }
  return result;
}

}  // namespace retriever::pipeline
