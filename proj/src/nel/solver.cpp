#include "retriever/nel/solver.hpp"

#include <stdexcept>

#include "retriever/common/error.hpp"

namespace retriever::nel {
namespace {

const KbEntity* assigned(const LinkAssignment& a, const std::vector<const KbEntity*>& candidates) {
  if (!a.kb_id) return nullptr;
  for (const auto* c : candidates) {
    if (c->kb_id == *a.kb_id) return c;
  }
  return nullptr;
}

// True when `a` beats `b` under equal scores.
bool tie_preferred(const KbEntity* a, const KbEntity* b) {
  if (a->pagerank != b->pagerank) return a->pagerank > b->pagerank;
  return a->kb_id < b->kb_id;
}

bool category_matches(const KbEntity& e, const std::string& ner_type) { return to_string(e.category) == ner_type; }

}  // namespace

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("embedding dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

CandidateLists candidate_lists(const std::vector<MentionQuery>& mentions, const KnowledgeBase& kb,
                               bool strict_types) {
  CandidateLists out;
  out.reserve(mentions.size());
  for (const auto& m : mentions) {
    auto list = kb.candidates(m.lemma_key);
    if (strict_types) {
      // "misc" mentions have no matching KB category.
      std::erase_if(list, [&](const KbEntity* e) { return !category_matches(*e, m.ner_type); });
    }
    out.push_back(std::move(list));
  }
  return out;
}

std::vector<LinkAssignment> initial_solution(const CandidateLists& candidates) {
  std::vector<LinkAssignment> out;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    LinkAssignment a;
    a.mention_index = static_cast<int>(i);
    if (!candidates[i].empty()) a.kb_id = candidates[i].front()->kb_id;
    out.push_back(std::move(a));
  }
  return out;
}

double objective(const std::vector<LinkAssignment>& solution, const CandidateLists& candidates) {
  std::vector<const KbEntity*> chosen;
  for (std::size_t i = 0; i < solution.size(); ++i) {
    if (const KbEntity* e = assigned(solution[i], candidates[i])) chosen.push_back(e);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < chosen.size(); ++i) {
    for (std::size_t j = i + 1; j < chosen.size(); ++j) total += dot(chosen[i]->embedding, chosen[j]->embedding);
  }
  return total;
}

bool refine(std::vector<LinkAssignment>& solution, const CandidateLists& candidates) {
  std::vector<const KbEntity*> current(solution.size(), nullptr);
  std::size_t linkable = 0;
  for (std::size_t i = 0; i < solution.size(); ++i) {
    current[i] = assigned(solution[i], candidates[i]);
    if (current[i]) ++linkable;
  }
  if (linkable < 2) return false;
  bool changed = false;
  for (std::size_t i = 0; i < solution.size(); ++i) {
    if (!current[i]) continue;
    const KbEntity* best = nullptr;
    double best_score = 0.0;
    for (const KbEntity* c : candidates[i]) {
      double score = 0.0;
      for (std::size_t j = 0; j < solution.size(); ++j) {
        if (j != i && current[j]) score += dot(c->embedding, current[j]->embedding);
      }
      if (!best || score > best_score || (score == best_score && tie_preferred(c, best))) {
        best = c;
        best_score = score;
      }
    }
    if (best != current[i]) {
      current[i] = best;
      solution[i].kb_id = best->kb_id;
      changed = true;
    }
  }
  return changed;
}

LinkResult link(const CandidateLists& candidates, const LinkOptions& options) {
  LinkResult result;
  result.assignments = initial_solution(candidates);
  std::vector<double> trace{objective(result.assignments, candidates)};
  while (result.passes < options.max_passes) {
    bool changed = refine(result.assignments, candidates);
    ++result.passes;
    trace.push_back(objective(result.assignments, candidates));
    if (!changed) {
      result.converged = true;
      break;
    }
  }
  for (auto& a : result.assignments) a.score_trace = trace;
  return result;
}

LinkResult link(const std::vector<MentionQuery>& mentions, const KnowledgeBase& kb, const LinkOptions& options) {
  return link(candidate_lists(mentions, kb, options.strict_types), options);
}

}  // namespace retriever::nel
