#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "retriever/analyzers/core.hpp"
#include "retriever/query/ast.hpp"
#include "retriever/store/article_store.hpp"

namespace retriever::query {

// Fixed-universe bit set over index slots. Bits past size() read as zero.
class DocSet {
 public:
  DocSet() = default;
  explicit DocSet(std::size_t n, bool value = false);

  void set(std::size_t i);
  void reset(std::size_t i);
  bool test(std::size_t i) const;
  std::size_t size() const { return size_; }
  std::size_t count() const;

  DocSet& operator&=(const DocSet& o);
  DocSet& operator|=(const DocSet& o);
  // Complement within [0, n).
  DocSet complement(std::size_t n) const;

  template <typename F>
  void for_each(F&& f) const {
    for (std::size_t w = 0; w < words_.size(); ++w) {
      for (std::uint64_t bits = words_[w]; bits; bits &= bits - 1) f(w * 64 + static_cast<std::size_t>(__builtin_ctzll(bits)));
    }
  }

 private:
  std::vector<std::uint64_t> words_;
  std::size_t size_ = 0;
};

// What the index keeps per article: metadata plus the searchable features.
struct IndexedArticle {
  store::ArticleId id = 0;
  std::string outlet_id;
  std::string url;
  std::string title;
  std::optional<Timestamp> published_at;
  std::vector<std::string> topics;
  std::vector<std::string> entities;
  std::vector<std::string> title_lemmas;  // word tokens only
  std::vector<std::string> body_lemmas;
  bool hidden = false;
};

IndexedArticle index_entry(const store::Article& a);

// Lemmas of the word tokens of `text`, as the core analyzer produces them.
std::vector<std::string> phrase_lemmas(std::string_view text, const analyzers::LemmaTable& lemmas);

// Whether `needle` occurs as a contiguous run in `haystack`.
bool contains_sequence(const std::vector<std::string>& haystack, const std::vector<std::string>& needle);

struct PhraseFields {
  bool title = true;
  bool body = true;
};

// In-memory inverted indices (entity, topic, lemma, outlet) over the article
// store, refreshed incrementally from the store's revision counter. Readers
// share a lock; refresh takes it exclusively.
class SearchIndex {
 public:
  SearchIndex(std::shared_ptr<store::ArticleStore> store, std::shared_ptr<const analyzers::LemmaTable> lemmas,
              PhraseFields phrase_fields = {});

  // Pulls every article changed since the last refresh. Returns how many
  // entries were added or replaced.
  std::size_t refresh();
  std::int64_t revision() const;
  std::size_t size() const;

  // Articles matching the query inside its frame (outlets, low-quality flag,
  // range; undated articles pass the range filter), as index slots.
  DocSet match(const QueryAst& q, const DateRange& range) const;
  DocSet match_node(const Node& n) const;
  DocSet frame(const QueryAst& q, const DateRange& range) const;

  // Runs `f(const IndexedArticle&)` for each slot in `set` under the read lock.
  template <typename F>
  void visit(const DocSet& set, F&& f) const {
    std::shared_lock lock(mu_);
    set.for_each([&](std::size_t slot) { f(docs_[slot]); });
  }
  template <typename F>
  void visit_all(F&& f) const {
    std::shared_lock lock(mu_);
    for (const auto& d : docs_) f(d);
  }

  const analyzers::LemmaTable& lemmas() const { return *lemmas_; }

 private:
  void put_locked(IndexedArticle a);
  DocSet match_node_locked(const Node& n) const;
  DocSet frame_locked(const QueryAst& q, const DateRange& range) const;
  const DocSet* posting(const std::unordered_map<std::string, DocSet>& m, const std::string& key) const;

  std::shared_ptr<store::ArticleStore> store_;
  std::shared_ptr<const analyzers::LemmaTable> lemmas_;
  PhraseFields phrase_fields_;
  mutable std::shared_mutex mu_;
  std::int64_t revision_ = 0;
  std::vector<IndexedArticle> docs_;
  std::unordered_map<store::ArticleId, std::size_t> slot_;
  std::unordered_map<std::string, DocSet> by_entity_, by_topic_, by_lemma_, by_outlet_;
  DocSet hidden_;
};

}  // namespace retriever::query
