#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

// A tolerant HTML tokenizer/tree builder, sufficient for article pages and
// search-result listings. It does not implement the full HTML5 tree
// construction algorithm: unknown end tags are ignored, unclosed elements
// are closed at end of input, and a new block element implicitly closes an
// open <p>.
namespace catalog::html {

struct Node {
    enum class Kind { Document, Element, Text };

    Kind kind = Kind::Document;
    std::string tag;  // lowercase; empty for text/document
    std::vector<std::pair<std::string, std::string>> attrs;
    std::string text;  // text nodes only, entities decoded
    std::vector<Node> children;

    bool is_element(std::string_view name) const { return kind == Kind::Element && tag == name; }
    std::optional<std::string_view> attr(std::string_view name) const;
};

Node parse(std::string_view html);

// Concatenated descendant text (script/style/noscript/template excluded).
std::string text_content(const Node& node);

std::string decode_entities(std::string_view s);

// Depth-first pre-order visit; the visitor returns false to skip a subtree.
template <typename Fn>
void walk(const Node& node, Fn&& fn) {
    if (!fn(node)) return;
    for (const auto& child : node.children) walk(child, fn);
}

}  // namespace catalog::html
