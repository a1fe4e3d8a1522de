#include "retriever/nel/kb.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "retriever/common/error.hpp"
#include "retriever/common/text.hpp"

namespace retriever::nel {

std::string to_string(Category c) {
  switch (c) {
    case Category::person: return "person";
    case Category::location: return "location";
    case Category::organization: return "organization";
  }
  return "?";
}

Category category_from_string(std::string_view s) {
  if (s == "person") return Category::person;
  if (s == "location") return Category::location;
  if (s == "organization") return Category::organization;
  throw Rejected("unknown entity category: " + std::string(s));
}

nlohmann::json KbEntity::to_json() const {
  return {{"kb_id", kb_id}, {"category", to_string(category)}, {"label", label},
          {"aliases", aliases}, {"pagerank", pagerank}, {"embedding", embedding}};
}

KbEntity KbEntity::from_json(const nlohmann::json& j) {
  KbEntity e;
  e.kb_id = j.at("kb_id").get<std::string>();
  e.category = category_from_string(j.at("category").get<std::string>());
  for (const auto& a : j.at("aliases")) e.aliases.push_back(a.get<std::string>());
  e.label = j.contains("label") ? j["label"].get<std::string>() : (e.aliases.empty() ? "" : e.aliases.front());
  e.pagerank = j.value("pagerank", 0.0);
  if (j.contains("embedding")) e.embedding = j["embedding"].get<std::vector<double>>();
  return e;
}

void KnowledgeBase::add(KbEntity e) {
  if (e.kb_id.empty()) throw Rejected("entity without kb_id");
  if (by_id_.count(e.kb_id)) throw Rejected("duplicate kb_id: " + e.kb_id);
  if (e.aliases.empty()) throw Rejected("entity without aliases: " + e.kb_id);
  if (!(e.pagerank >= 0.0) || !std::isfinite(e.pagerank)) throw Rejected("invalid pagerank: " + e.kb_id);
  if (entities_.empty()) {
    dimension_ = e.embedding.size();
  } else if (e.embedding.size() != dimension_) {
    throw Rejected("embedding dimension mismatch: " + e.kb_id);
  }
  if (e.label.empty()) e.label = e.aliases.front();
  std::vector<std::string> keys;
  for (const auto& a : e.aliases) {
    std::string key = normalize_key(a);
    if (!key.empty() && std::find(keys.begin(), keys.end(), key) == keys.end()) keys.push_back(std::move(key));
  }
  if (keys.empty()) throw Rejected("entity without usable aliases: " + e.kb_id);
  e.aliases = std::move(keys);
  std::size_t index = entities_.size();
  by_id_.emplace(e.kb_id, index);
  for (const auto& key : e.aliases) by_alias_[key].push_back(index);
  entities_.push_back(std::move(e));
}

KnowledgeBase KnowledgeBase::load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open knowledge base " + path);
  KnowledgeBase kb;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw ConfigError(path + ":" + std::to_string(lineno) + ": invalid JSON");
    try {
      kb.add(KbEntity::from_json(j));
    } catch (const std::exception& e) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return kb;
}

void KnowledgeBase::save_jsonl(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  for (const auto& e : entities_) out << e.to_json().dump() << '\n';
}

const KbEntity* KnowledgeBase::find(std::string_view kb_id) const {
  auto it = by_id_.find(std::string(kb_id));
  return it == by_id_.end() ? nullptr : &entities_[it->second];
}

std::vector<const KbEntity*> KnowledgeBase::candidates(std::string_view key) const {
  std::vector<const KbEntity*> out;
  auto it = by_alias_.find(normalize_key(key));
  if (it == by_alias_.end()) return out;
  for (std::size_t i : it->second) out.push_back(&entities_[i]);
  std::sort(out.begin(), out.end(), [](const KbEntity* a, const KbEntity* b) {
    if (a->pagerank != b->pagerank) return a->pagerank > b->pagerank;
    return a->kb_id < b->kb_id;
  });
  return out;
}

std::vector<double> pagerank(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                             double damping, int iterations, double tol) {
  if (n == 0) return {};
  std::vector<std::size_t> out_degree(n, 0);
  for (const auto& [from, to] : edges) {
    if (from >= n || to >= n) throw Rejected("edge endpoint out of range");
    ++out_degree[from];
  }
  const double uniform = 1.0 / static_cast<double>(n);
  std::vector<double> rank(n, uniform), next(n);
  for (int it = 0; it < iterations; ++it) {
    double dangling = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      if (out_degree[v] == 0) dangling += rank[v];
    }
    std::fill(next.begin(), next.end(), (1.0 - damping) * uniform + damping * dangling * uniform);
    for (const auto& [from, to] : edges) next[to] += damping * rank[from] / static_cast<double>(out_degree[from]);
    double change = 0.0;
    for (std::size_t v = 0; v < n; ++v) change += std::abs(next[v] - rank[v]);
    rank.swap(next);
    if (change < tol) break;
  }
  return rank;
}

KnowledgeBase build_knowledge_base(const std::string& entities_path, const std::string& edges_path) {
  auto seed = KnowledgeBase::load_jsonl(entities_path);
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < seed.entities().size(); ++i) index.emplace(seed.entities()[i].kb_id, i);

  std::ifstream in(edges_path);
  if (!in) throw ConfigError("cannot open edge list " + edges_path);
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    auto tab = line.find('\t');
    auto where = edges_path + ":" + std::to_string(lineno) + ": ";
    if (tab == std::string::npos) throw ConfigError(where + "expected from<TAB>to");
    auto from = index.find(line.substr(0, tab));
    auto to = index.find(line.substr(tab + 1));
    if (from == index.end() || to == index.end()) throw ConfigError(where + "unknown kb_id");
    edges.emplace_back(from->second, to->second);
  }
  auto scores = pagerank(seed.entities().size(), edges);
  KnowledgeBase kb;
  for (std::size_t i = 0; i < seed.entities().size(); ++i) {
    KbEntity e = seed.entities()[i];
    e.pagerank = scores[i];
    kb.add(std::move(e));
  }
  return kb;
}

}  // namespace retriever::nel
