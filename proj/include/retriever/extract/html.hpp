#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace retriever::extract {

// A lenient HTML DOM. Text nodes have an empty tag.
struct Node {
  std::string tag;  // lowercase
  std::vector<std::pair<std::string, std::string>> attrs;
  std::string text;  // entity-decoded, text nodes only
  std::vector<std::unique_ptr<Node>> children;
  Node* parent = nullptr;

  bool is_text() const { return tag.empty(); }
  bool is_element() const { return !tag.empty(); }
  std::optional<std::string_view> attr(std::string_view name) const;
  // Concatenated descendant text; <br> contributes a newline.
  std::string text_content() const;
};

struct Document {
  std::unique_ptr<Node> root;  // tag "#document"
  // Raw contents of <script> elements, with their type attribute.
  std::vector<std::pair<std::string, std::string>> scripts;
  std::size_t element_count = 0;
};

// Never throws on malformed markup: unknown end tags are ignored and open
// elements are closed implicitly. Contents of script/style/template are not
// part of the tree.
Document parse_html(std::string_view html);

std::string decode_entities(std::string_view s);

// Visits elements in document order. The visitor returns false to skip the
// element's subtree.
template <typename F>
void walk(const Node& node, F&& visit) {
  for (const auto& child : node.children) {
    if (child->is_element() && visit(*child)) walk(*child, visit);
  }
}

}  // namespace retriever::extract
