#pragma once

#include <optional>
#include <string>
#include <vector>

#include "retriever/nel/kb.hpp"

namespace retriever::nel {

inline constexpr int kMaxRefinePasses = 5;

struct MentionQuery {
  std::string lemma_key;
  // NER type (person, location, organization, misc); used in strict mode only.
  std::string ner_type;
};

struct LinkAssignment {
  int mention_index = 0;
  std::optional<std::string> kb_id;  // absent = unlinkable
  // Global objective after initialization and after each refine pass.
  std::vector<double> score_trace;
};

using CandidateLists = std::vector<std::vector<const KbEntity*>>;

struct LinkOptions {
  int max_passes = kMaxRefinePasses;
  // Keep only candidates whose category matches the mention's NER type.
  bool strict_types = false;
};

struct LinkResult {
  std::vector<LinkAssignment> assignments;
  int passes = 0;
  bool converged = false;
};

double dot(const std::vector<double>& a, const std::vector<double>& b);

CandidateLists candidate_lists(const std::vector<MentionQuery>& mentions, const KnowledgeBase& kb,
                               bool strict_types = false);

// Each mention takes its first (highest PageRank) candidate; mentions with
// no candidates are unlinkable.
std::vector<LinkAssignment> initial_solution(const CandidateLists& candidates);

// Sum over linkable pairs i<j of dot(e_i, e_j).
double objective(const std::vector<LinkAssignment>& solution, const CandidateLists& candidates);

// One sequential pass in document order: each linkable mention takes the
// candidate maximizing the summed dot product with the current assignments
// of all other linkable mentions (ties: higher PageRank, then smaller
// kb_id). Returns whether any assignment changed. No-op with fewer than two
// linkable mentions.
bool refine(std::vector<LinkAssignment>& solution, const CandidateLists& candidates);

LinkResult link(const CandidateLists& candidates, const LinkOptions& options = {});
LinkResult link(const std::vector<MentionQuery>& mentions, const KnowledgeBase& kb, const LinkOptions& options = {});

}  // namespace retriever::nel
