#include "retriever/query/index.hpp"

#include <algorithm>
#include <set>

#include "retriever/common/text.hpp"

namespace retriever::query {

DocSet::DocSet(std::size_t n, bool value) : words_((n + 63) / 64, value ? ~0ULL : 0ULL), size_(n) {
  if (value && n % 64) words_.back() &= (1ULL << (n % 64)) - 1;
}

void DocSet::set(std::size_t i) {
  if (i >= size_) {
    size_ = i + 1;
    words_.resize((size_ + 63) / 64, 0);
  }
  words_[i / 64] |= 1ULL << (i % 64);
}

void DocSet::reset(std::size_t i) {
  if (i < size_) words_[i / 64] &= ~(1ULL << (i % 64));
}

bool DocSet::test(std::size_t i) const { return i < size_ && (words_[i / 64] >> (i % 64)) & 1ULL; }

std::size_t DocSet::count() const {
  std::size_t c = 0;
  for (auto w : words_) c += static_cast<std::size_t>(__builtin_popcountll(w));
  return c;
}

DocSet& DocSet::operator&=(const DocSet& o) {
  for (std::size_t w = 0; w < words_.size(); ++w) words_[w] &= w < o.words_.size() ? o.words_[w] : 0ULL;
  return *this;
}

DocSet& DocSet::operator|=(const DocSet& o) {
  if (o.size_ > size_) {
    size_ = o.size_;
    words_.resize(o.words_.size(), 0);
  }
  for (std::size_t w = 0; w < o.words_.size(); ++w) words_[w] |= o.words_[w];
  return *this;
}

DocSet DocSet::complement(std::size_t n) const {
  DocSet out(n, true);
  for (std::size_t w = 0; w < out.words_.size() && w < words_.size(); ++w) out.words_[w] &= ~words_[w];
  return out;
}

namespace {

bool is_word(const analyzers::Token& t) {
  for (char32_t c : to_u32(t.text)) {
    if (is_alnum(c)) return true;
  }
  return false;
}

}  // namespace

IndexedArticle index_entry(const store::Article& a) {
  IndexedArticle e;
  e.id = a.id;
  e.outlet_id = a.outlet_id;
  e.url = a.url;
  e.title = a.title;
  e.published_at = a.published_at;
  e.hidden = a.hidden;
  const auto& f = a.features;
  if (auto p = f.find("topics"); p != f.end() && p->contains("data")) {
    e.topics = (*p)["data"].value("labels", std::vector<std::string>{});
  }
  if (auto p = f.find("nel"); p != f.end() && p->contains("data")) {
    e.entities = (*p)["data"].value("entities", std::vector<std::string>{});
  }
  if (auto p = f.find("core"); p != f.end() && p->contains("data")) {
    auto core = analyzers::CoreResult::from_json((*p)["data"]);
    const std::size_t title_end = codepoint_length(a.title);
    for (const auto& t : core.tokens) {
      if (!is_word(t)) continue;
      (t.end <= title_end ? e.title_lemmas : e.body_lemmas).push_back(t.lemma);
    }
  }
  return e;
}

std::vector<std::string> phrase_lemmas(std::string_view text, const analyzers::LemmaTable& lemmas) {
  std::vector<std::string> out;
  for (const auto& t : analyzers::tokenize(nfkc(text))) {
    if (is_word(t)) out.push_back(lemmas.lemma(t.text));
  }
  return out;
}

bool contains_sequence(const std::vector<std::string>& haystack, const std::vector<std::string>& needle) {
  if (needle.empty()) return true;
  return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) != haystack.end();
}

SearchIndex::SearchIndex(std::shared_ptr<store::ArticleStore> store, std::shared_ptr<const analyzers::LemmaTable> lemmas,
                         PhraseFields phrase_fields)
    : store_(std::move(store)), lemmas_(std::move(lemmas)), phrase_fields_(phrase_fields) {
  if (!lemmas_) lemmas_ = std::make_shared<analyzers::LemmaTable>();
}

std::size_t SearchIndex::refresh() {
  std::int64_t after = revision();
  std::size_t updated = 0;
  for (;;) {
    auto batch = store_->changed_since(after, 1000);
    if (batch.empty()) break;
    std::vector<IndexedArticle> entries;
    entries.reserve(batch.size());
    for (const auto& a : batch) entries.push_back(index_entry(a));
    std::unique_lock lock(mu_);
    for (auto& e : entries) put_locked(std::move(e));
    after = batch.back().revision;
    revision_ = after;
    updated += batch.size();
  }
  return updated;
}

std::int64_t SearchIndex::revision() const {
  std::shared_lock lock(mu_);
  return revision_;
}

std::size_t SearchIndex::size() const {
  std::shared_lock lock(mu_);
  return docs_.size();
}

void SearchIndex::put_locked(IndexedArticle a) {
  std::size_t slot;
  if (auto it = slot_.find(a.id); it != slot_.end()) {
    slot = it->second;
    const auto& old = docs_[slot];
    for (const auto& k : old.entities) by_entity_[k].reset(slot);
    for (const auto& k : old.topics) by_topic_[k].reset(slot);
    for (const auto& k : old.title_lemmas) by_lemma_[k].reset(slot);
    for (const auto& k : old.body_lemmas) by_lemma_[k].reset(slot);
    by_outlet_[old.outlet_id].reset(slot);
    hidden_.reset(slot);
    docs_[slot] = std::move(a);
  } else {
    slot = docs_.size();
    slot_.emplace(a.id, slot);
    docs_.push_back(std::move(a));
  }
  const auto& d = docs_[slot];
  for (const auto& k : d.entities) by_entity_[k].set(slot);
  for (const auto& k : d.topics) by_topic_[k].set(slot);
  if (phrase_fields_.title) {
    for (const auto& k : d.title_lemmas) by_lemma_[k].set(slot);
  }
  if (phrase_fields_.body) {
    for (const auto& k : d.body_lemmas) by_lemma_[k].set(slot);
  }
  by_outlet_[d.outlet_id].set(slot);
  if (d.hidden) hidden_.set(slot);
}

const DocSet* SearchIndex::posting(const std::unordered_map<std::string, DocSet>& m, const std::string& key) const {
  auto it = m.find(key);
  return it == m.end() ? nullptr : &it->second;
}

DocSet SearchIndex::match_node(const Node& n) const {
  std::shared_lock lock(mu_);
  return match_node_locked(n);
}

DocSet SearchIndex::match_node_locked(const Node& n) const {
  const std::size_t universe = docs_.size();
  switch (n.op) {
    case Op::and_: {
      DocSet out = match_node_locked(*n.args.at(0));
      for (std::size_t i = 1; i < n.args.size(); ++i) out &= match_node_locked(*n.args[i]);
      return out;
    }
    case Op::or_: {
      DocSet out(universe);
      for (const auto& a : n.args) out |= match_node_locked(*a);
      return out;
    }
    case Op::not_: return match_node_locked(*n.args.at(0)).complement(universe);
    case Op::leaf: break;
  }
  DocSet out(universe);
  if (const auto* e = std::get_if<EntityLeaf>(&n.leaf)) {
    if (const auto* p = posting(by_entity_, e->kb_id)) out |= *p;
    return out;
  }
  if (const auto* t = std::get_if<TopicLeaf>(&n.leaf)) {
    if (const auto* p = posting(by_topic_, t->label)) out |= *p;
    return out;
  }
  const auto& ph = std::get<PhraseLeaf>(n.leaf);
  auto lemmas = phrase_lemmas(ph.text, *lemmas_);
  if (lemmas.empty()) throw QueryError("invalid_query", "phrase \"" + ph.text + "\" has no words");
  DocSet candidates(universe, true);
  for (const auto& l : std::set<std::string>(lemmas.begin(), lemmas.end())) {
    const auto* p = posting(by_lemma_, l);
    if (!p) return out;
    candidates &= *p;
  }
  if (ph.mode == PhraseMode::all_words) return candidates;
  candidates.for_each([&](std::size_t slot) {
    const auto& d = docs_[slot];
    if ((phrase_fields_.title && contains_sequence(d.title_lemmas, lemmas)) ||
        (phrase_fields_.body && contains_sequence(d.body_lemmas, lemmas))) {
      out.set(slot);
    }
  });
  return out;
}

DocSet SearchIndex::frame(const QueryAst& q, const DateRange& range) const {
  std::shared_lock lock(mu_);
  return frame_locked(q, range);
}

DocSet SearchIndex::frame_locked(const QueryAst& q, const DateRange& range) const {
  const std::size_t universe = docs_.size();
  DocSet out(universe, q.outlets.empty());
  for (const auto& o : q.outlets) {
    if (const auto* p = posting(by_outlet_, o)) out |= *p;
  }
  if (!q.include_low_quality) out &= hidden_.complement(universe);
  DocSet in_range(universe);
  for (std::size_t slot = 0; slot < universe; ++slot) {
    const auto& d = docs_[slot];
    if (!d.published_at || range.contains(std::chrono::floor<std::chrono::days>(*d.published_at))) in_range.set(slot);
  }
  out &= in_range;
  return out;
}

DocSet SearchIndex::match(const QueryAst& q, const DateRange& range) const {
  std::shared_lock lock(mu_);
  DocSet out = frame_locked(q, range);
  out &= match_node_locked(*q.node);
  return out;
}

}  // namespace retriever::query
