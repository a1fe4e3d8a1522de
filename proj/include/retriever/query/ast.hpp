#pragma once

#include <chrono>
#include <memory>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "retriever/common/error.hpp"

namespace retriever::query {

// A malformed request. `code` is a stable machine-readable identifier.
class QueryError : public Rejected {
 public:
  QueryError(std::string code, const std::string& message) : Rejected(message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

inline constexpr int kMaxQueryDepth = 32;

enum class PhraseMode { contiguous, all_words };

struct EntityLeaf {
  std::string kb_id;
};
struct PhraseLeaf {
  std::string text;
  PhraseMode mode = PhraseMode::contiguous;
};
struct TopicLeaf {
  std::string label;
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

enum class Op { leaf, and_, or_, not_ };

struct Node {
  Op op = Op::leaf;
  std::variant<std::monostate, EntityLeaf, PhraseLeaf, TopicLeaf> leaf;
  std::vector<NodePtr> args;  // NOT has exactly one

  static NodePtr entity(std::string kb_id);
  static NodePtr phrase(std::string text, PhraseMode mode = PhraseMode::contiguous);
  static NodePtr topic(std::string label);
  static NodePtr all(std::vector<NodePtr> args);
  static NodePtr any(std::vector<NodePtr> args);
  static NodePtr negate(NodePtr arg);
};

struct QueryAst {
  std::set<std::string> outlets;  // empty = all
  NodePtr node;
  bool include_low_quality = false;
};

// Wire format:
//   {"outlets": [...], "include_low_quality": bool, "node": N}
//   N = {"and": [N, ...]} | {"or": [N, ...]} | {"not": N}
//     | {"entity": "Q9036"} | {"topic": "SPORT"}
//     | {"phrase": "magnet", "mode": "contiguous" | "all_words"}
// Throws QueryError("invalid_query") on anything else, on depth above
// kMaxQueryDepth, empty AND/OR, unknown topic labels and empty leaves.
QueryAst parse_query(const nlohmann::json& j);
NodePtr parse_node(const nlohmann::json& j);
nlohmann::json to_json(const QueryAst& q);
nlohmann::json to_json(const Node& n);

int depth(const Node& n);
std::size_t leaf_count(const Node& n);

enum class Bucket { day, week, month };
Bucket bucket_from_string(std::string_view s);
std::string to_string(Bucket b);

// Inclusive UTC calendar-day range.
struct DateRange {
  std::chrono::sys_days from;
  std::chrono::sys_days to;

  bool contains(std::chrono::sys_days d) const { return from <= d && d <= to; }
};

// {"from": "YYYY-MM-DD", "to": "YYYY-MM-DD"}; QueryError("invalid_range")
// when unparsable or inverted.
DateRange parse_range(const nlohmann::json& j);
nlohmann::json to_json(const DateRange& r);

// First day of the bucket holding `d`; weeks start on Monday.
std::chrono::sys_days bucket_start(std::chrono::sys_days d, Bucket b);
std::chrono::sys_days next_bucket(std::chrono::sys_days start, Bucket b);

}  // namespace retriever::query
