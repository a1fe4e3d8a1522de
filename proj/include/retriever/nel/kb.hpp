#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace retriever::nel {

enum class Category { person, location, organization };
std::string to_string(Category c);
Category category_from_string(std::string_view s);

struct KbEntity {
  std::string kb_id;
  Category category = Category::person;
  std::vector<std::string> aliases;  // normalized keys; the first is the canonical label
  std::string label;                 // display form of the canonical label
  double pagerank = 0.0;
  std::vector<double> embedding;

  nlohmann::json to_json() const;
  static KbEntity from_json(const nlohmann::json& j);
};

// Immutable after loading. Aliases are stored normalized (NFKC, lowercase,
// single-spaced).
class KnowledgeBase {
 public:
  // Rejects duplicate ids, empty alias lists, negative PageRank and
  // embeddings whose dimension differs from the first entity's.
  void add(KbEntity entity);

  static KnowledgeBase load_jsonl(const std::string& path);
  void save_jsonl(const std::string& path) const;

  const KbEntity* find(std::string_view kb_id) const;
  // Entities with `key` among their aliases, PageRank descending, then
  // kb_id ascending. The key is normalized before lookup.
  std::vector<const KbEntity*> candidates(std::string_view key) const;

  std::size_t size() const { return entities_.size(); }
  std::size_t dimension() const { return dimension_; }
  const std::vector<KbEntity>& entities() const { return entities_; }

 private:
  std::vector<KbEntity> entities_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_alias_;
  std::size_t dimension_ = 0;
};

inline std::string wikidata_url(std::string_view kb_id) {
  return "https://www.wikidata.org/wiki/" + std::string(kb_id);
}

// Power iteration with uniform teleport; dangling nodes spread their mass
// uniformly. Stops after `iterations` or when the L1 change is below `tol`.
// Scores sum to 1.
std::vector<double> pagerank(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges,
                             double damping = 0.85, int iterations = 100, double tol = 1e-9);

// Entities from JSON-lines (pagerank optional and ignored) plus a TSV edge
// list "from_kb_id<TAB>to_kb_id"; PageRank is computed over the edges.
// Edges naming unknown ids are rejected.
KnowledgeBase build_knowledge_base(const std::string& entities_path, const std::string& edges_path);

}  // namespace retriever::nel
