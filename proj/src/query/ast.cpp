#include "retriever/query/ast.hpp"

#include <algorithm>

#include "retriever/analyzers/topics.hpp"
#include "retriever/common/time.hpp"

namespace retriever::query {
namespace {

using nlohmann::json;

[[noreturn]] void invalid(const std::string& message) { throw QueryError("invalid_query", message); }

NodePtr make(Node n) { return std::make_shared<const Node>(std::move(n)); }

NodePtr parse_node_at(const json& j, int level) {
  if (level > kMaxQueryDepth) invalid("query deeper than " + std::to_string(kMaxQueryDepth) + " levels");
  if (!j.is_object() || j.empty()) invalid("query node must be a non-empty object");
  auto string_field = [&](const char* key) {
    const auto& v = j.at(key);
    if (!v.is_string() || v.get<std::string>().empty()) invalid(std::string("\"") + key + "\" must be a non-empty string");
    return v.get<std::string>();
  };
  if (j.contains("and") || j.contains("or")) {
    if (j.size() != 1) invalid("boolean node with extra keys");
    bool is_and = j.contains("and");
    const auto& args = j.begin().value();
    if (!args.is_array() || args.empty()) invalid("AND/OR needs a non-empty array");
    std::vector<NodePtr> children;
    for (const auto& a : args) children.push_back(parse_node_at(a, level + 1));
    return is_and ? Node::all(std::move(children)) : Node::any(std::move(children));
  }
  if (j.contains("not")) {
    if (j.size() != 1) invalid("NOT node with extra keys");
    return Node::negate(parse_node_at(j["not"], level + 1));
  }
  if (j.contains("entity")) {
    if (j.size() != 1) invalid("entity leaf with extra keys");
    return Node::entity(string_field("entity"));
  }
  if (j.contains("topic")) {
    if (j.size() != 1) invalid("topic leaf with extra keys");
    auto label = string_field("topic");
    if (!analyzers::is_topic_label(label)) invalid("unknown topic \"" + label + "\"");
    return Node::topic(label);
  }
  if (j.contains("phrase")) {
    PhraseMode mode = PhraseMode::contiguous;
    if (j.contains("mode")) {
      if (!j["mode"].is_string()) invalid("\"mode\" must be a string");
      auto m = j["mode"].get<std::string>();
      if (m == "all_words") {
        mode = PhraseMode::all_words;
      } else if (m != "contiguous") {
        invalid("unknown phrase mode \"" + m + "\"");
      }
    }
    if (j.size() != (j.contains("mode") ? 2u : 1u)) invalid("phrase leaf with extra keys");
    return Node::phrase(string_field("phrase"), mode);
  }
  invalid("unknown query node " + j.dump());
}

}  // namespace

NodePtr Node::entity(std::string kb_id) { return make({Op::leaf, EntityLeaf{std::move(kb_id)}, {}}); }
NodePtr Node::phrase(std::string text, PhraseMode mode) { return make({Op::leaf, PhraseLeaf{std::move(text), mode}, {}}); }
NodePtr Node::topic(std::string label) { return make({Op::leaf, TopicLeaf{std::move(label)}, {}}); }
NodePtr Node::all(std::vector<NodePtr> args) { return make({Op::and_, {}, std::move(args)}); }
NodePtr Node::any(std::vector<NodePtr> args) { return make({Op::or_, {}, std::move(args)}); }
NodePtr Node::negate(NodePtr arg) { return make({Op::not_, {}, {std::move(arg)}}); }

NodePtr parse_node(const json& j) { return parse_node_at(j, 1); }

QueryAst parse_query(const json& j) {
  if (!j.is_object()) invalid("query must be an object");
  for (const auto& [key, _] : j.items()) {
    if (key != "outlets" && key != "node" && key != "include_low_quality") invalid("unknown query field \"" + key + "\"");
  }
  QueryAst q;
  if (!j.contains("node")) invalid("query without \"node\"");
  q.node = parse_node(j["node"]);
  if (j.contains("outlets")) {
    if (!j["outlets"].is_array()) invalid("\"outlets\" must be an array");
    for (const auto& o : j["outlets"]) {
      if (!o.is_string()) invalid("outlet ids must be strings");
      q.outlets.insert(o.get<std::string>());
    }
  }
  if (j.contains("include_low_quality")) {
    if (!j["include_low_quality"].is_boolean()) invalid("\"include_low_quality\" must be a boolean");
    q.include_low_quality = j["include_low_quality"].get<bool>();
  }
  return q;
}

json to_json(const Node& n) {
  switch (n.op) {
    case Op::and_:
    case Op::or_: {
      json args = json::array();
      for (const auto& a : n.args) args.push_back(to_json(*a));
      return {{n.op == Op::and_ ? "and" : "or", std::move(args)}};
    }
    case Op::not_: return {{"not", to_json(*n.args.at(0))}};
    case Op::leaf: break;
  }
  if (const auto* e = std::get_if<EntityLeaf>(&n.leaf)) return {{"entity", e->kb_id}};
  if (const auto* t = std::get_if<TopicLeaf>(&n.leaf)) return {{"topic", t->label}};
  const auto& p = std::get<PhraseLeaf>(n.leaf);
  json out{{"phrase", p.text}};
  if (p.mode == PhraseMode::all_words) out["mode"] = "all_words";
  return out;
}

json to_json(const QueryAst& q) {
  return {{"outlets", q.outlets}, {"node", to_json(*q.node)}, {"include_low_quality", q.include_low_quality}};
}

int depth(const Node& n) {
  int d = 0;
  for (const auto& a : n.args) d = std::max(d, depth(*a));
  return d + 1;
}

std::size_t leaf_count(const Node& n) {
  if (n.op == Op::leaf) return 1;
  std::size_t c = 0;
  for (const auto& a : n.args) c += leaf_count(*a);
  return c;
}

Bucket bucket_from_string(std::string_view s) {
  if (s == "day") return Bucket::day;
  if (s == "week") return Bucket::week;
  if (s == "month") return Bucket::month;
  throw QueryError("invalid_bucket", "bucket must be day, week or month");
}

std::string to_string(Bucket b) {
  switch (b) {
    case Bucket::day: return "day";
    case Bucket::week: return "week";
    case Bucket::month: return "month";
  }
  return "?";
}

DateRange parse_range(const json& j) {
  if (!j.is_object() || !j.contains("from") || !j.contains("to") || !j["from"].is_string() || !j["to"].is_string()) {
    throw QueryError("invalid_range", "range must be {\"from\": \"YYYY-MM-DD\", \"to\": \"YYYY-MM-DD\"}");
  }
  auto from = parse_date(j["from"].get<std::string>());
  auto to = parse_date(j["to"].get<std::string>());
  if (!from || !to) throw QueryError("invalid_range", "unparsable range date");
  if (*to < *from) throw QueryError("invalid_range", "range ends before it starts");
  return {*from, *to};
}

json to_json(const DateRange& r) { return {{"from", format_date(r.from)}, {"to", format_date(r.to)}}; }

std::chrono::sys_days bucket_start(std::chrono::sys_days d, Bucket b) {
  using namespace std::chrono;
  switch (b) {
    case Bucket::day: return d;
    case Bucket::week: {
      unsigned iso = weekday(d).iso_encoding();  // Monday = 1
      return d - days(iso - 1);
    }
    case Bucket::month: {
      year_month_day ymd(d);
      return sys_days(ymd.year() / ymd.month() / 1);
    }
  }
  return d;
}

std::chrono::sys_days next_bucket(std::chrono::sys_days start, Bucket b) {
  using namespace std::chrono;
  switch (b) {
    case Bucket::day: return start + days(1);
    case Bucket::week: return start + days(7);
    case Bucket::month: {
      year_month_day ymd(start);
      return sys_days((ymd.year() / ymd.month() + months(1)) / 1);
    }
  }
  return start;
}

}  // namespace retriever::query
