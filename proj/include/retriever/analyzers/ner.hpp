#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "retriever/analyzers/core.hpp"

namespace retriever::analyzers {

inline constexpr const char* kNerTypes[] = {"person", "location", "organization", "misc"};
bool is_ner_type(std::string_view s);

struct EntityMention {
  std::size_t start = 0;  // code points into the composite text
  std::size_t end = 0;
  std::string surface;
  std::string ner_type;
  std::string lemma_key;  // normalized dictionary form, used for KB lookup
  std::size_t first_token = 0;
  std::size_t last_token = 0;  // exclusive

  bool operator==(const EntityMention&) const = default;
  nlohmann::json to_json() const;
  static EntityMention from_json(const nlohmann::json& j);
};

struct GazetteerEntry {
  std::string surface;
  std::string ner_type;
  std::string kb_id;  // may be empty
};

// Name dictionary matched over token keys. An entry is stored as the
// lowercased token sequence of its surface form; a text token matches an
// entry token when either its lowercased text or its lemma equals it, so
// inflected forms match through the lemma table.
class Gazetteer {
 public:
  // The first entry for a given token sequence wins.
  void add(GazetteerEntry entry);
  // UTF-8 TSV "surface<TAB>type[<TAB>kb_id]".
  static Gazetteer load_tsv(const std::string& path);

  std::size_t size() const { return entries_.size(); }
  const std::vector<GazetteerEntry>& entries() const { return entries_; }
  // Entry index for an exact key sequence.
  std::optional<std::size_t> lookup(const std::vector<std::string>& keys) const;
  // Longest entry token count, 0 when empty.
  std::size_t max_length() const { return max_length_; }
  const std::vector<std::string>& keys_of(std::size_t entry) const { return keys_[entry]; }

 private:
  std::vector<GazetteerEntry> entries_;
  std::vector<std::vector<std::string>> keys_;
  std::map<std::vector<std::string>, std::size_t> index_;
  std::size_t max_length_ = 0;
};

// Leftmost-longest matching within sentences. `composite` is the text the
// token offsets refer to.
std::vector<EntityMention> ner_analyze(const std::vector<Token>& tokens, std::u32string_view composite,
                                       const Gazetteer& gazetteer);

}  // namespace retriever::analyzers
