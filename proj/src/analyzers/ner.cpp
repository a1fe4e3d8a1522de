#include "retriever/analyzers/ner.hpp"

#include <algorithm>
#include <fstream>

#include "retriever/common/error.hpp"
#include "retriever/common/text.hpp"

namespace retriever::analyzers {

bool is_ner_type(std::string_view s) {
  return std::any_of(std::begin(kNerTypes), std::end(kNerTypes), [&](const char* t) { return s == t; });
}

nlohmann::json EntityMention::to_json() const {
  return {{"start", start}, {"end", end}, {"surface", surface}, {"ner_type", ner_type},
          {"lemma_key", lemma_key}, {"tokens", {first_token, last_token}}};
}

EntityMention EntityMention::from_json(const nlohmann::json& j) {
  try {
    EntityMention m;
    m.start = j.at("start").get<std::size_t>();
    m.end = j.at("end").get<std::size_t>();
    m.surface = j.at("surface").get<std::string>();
    m.ner_type = j.at("ner_type").get<std::string>();
    m.lemma_key = j.at("lemma_key").get<std::string>();
    m.first_token = j.at("tokens").at(0).get<std::size_t>();
    m.last_token = j.at("tokens").at(1).get<std::size_t>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DependencyError(std::string("malformed ner features: ") + e.what());
  }
}

void Gazetteer::add(GazetteerEntry entry) {
  if (!is_ner_type(entry.ner_type)) throw Rejected("unknown NER type: " + entry.ner_type);
  std::vector<std::string> keys;
  for (const auto& t : tokenize(nfkc(entry.surface))) keys.push_back(to_lower(t.text));
  if (keys.empty()) throw Rejected("empty gazetteer surface");
  if (index_.count(keys)) return;
  index_.emplace(keys, entries_.size());
  max_length_ = std::max(max_length_, keys.size());
  keys_.push_back(std::move(keys));
  entries_.push_back(std::move(entry));
}

Gazetteer Gazetteer::load_tsv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open gazetteer " + path);
  Gazetteer g;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> cols;
    std::size_t pos = 0;
    for (;;) {
      auto tab = line.find('\t', pos);
      cols.push_back(line.substr(pos, tab == std::string::npos ? std::string::npos : tab - pos));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    if (cols.size() < 2 || cols.size() > 3) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected surface<TAB>type[<TAB>kb_id]");
    }
    try {
      g.add({cols[0], cols[1], cols.size() == 3 ? cols[2] : ""});
    } catch (const Rejected& e) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return g;
}

std::optional<std::size_t> Gazetteer::lookup(const std::vector<std::string>& keys) const {
  auto it = index_.find(keys);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

namespace {

// Longest entry matching tokens [i, i+n) for some n, trying both the
// surface and lemma key of every token.
struct Match {
  std::size_t length = 0;
  std::size_t entry = 0;
};

void search(const std::vector<Token>& tokens, std::size_t begin, std::size_t limit, const Gazetteer& g,
            std::vector<std::string>& prefix, Match& best) {
  if (!prefix.empty()) {
    if (auto e = g.lookup(prefix); e && prefix.size() > best.length) best = {prefix.size(), *e};
  }
  std::size_t i = begin + prefix.size();
  if (i >= limit || prefix.size() >= g.max_length()) return;
  std::string surface = to_lower(tokens[i].text);
  prefix.push_back(surface);
  search(tokens, begin, limit, g, prefix, best);
  prefix.pop_back();
  if (!tokens[i].lemma.empty() && tokens[i].lemma != surface) {
    prefix.push_back(tokens[i].lemma);
    search(tokens, begin, limit, g, prefix, best);
    prefix.pop_back();
  }
}

}  // namespace

std::vector<EntityMention> ner_analyze(const std::vector<Token>& tokens, std::u32string_view composite,
                                       const Gazetteer& gazetteer) {
  std::vector<EntityMention> out;
  if (gazetteer.size() == 0) return out;
  std::size_t i = 0;
  while (i < tokens.size()) {
    std::size_t limit = i;
    while (limit < tokens.size() && tokens[limit].sentence_index == tokens[i].sentence_index) ++limit;
    std::vector<std::string> prefix;
    Match best;
    search(tokens, i, limit, gazetteer, prefix, best);
    if (best.length == 0) {
      ++i;
      continue;
    }
    const auto& entry = gazetteer.entries()[best.entry];
    EntityMention m;
    m.first_token = i;
    m.last_token = i + best.length;
    m.start = tokens[i].start;
    m.end = tokens[i + best.length - 1].end;
    if (m.end > composite.size()) throw Rejected("token offsets exceed the text");
    m.surface = to_utf8(composite.substr(m.start, m.end - m.start));
    m.ner_type = entry.ner_type;
    m.lemma_key = normalize_key(entry.surface);
    out.push_back(std::move(m));
    i += best.length;
  }
  return out;
}

}  // namespace retriever::analyzers
