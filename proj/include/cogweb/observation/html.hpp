#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cogweb::obs {

struct HtmlNode {
  bool is_text = false;
  std::string tag;  // lowercase; empty for text nodes
  std::vector<std::pair<std::string, std::string>> attrs;
  std::string text;  // decoded character data for text nodes
  std::vector<HtmlNode> children;

  const std::string* attr(std::string_view name) const;
  bool has_attr(std::string_view name) const { return attr(name) != nullptr; }
};

// Parses an outerHTML fragment that must contain exactly one element
// (surrounding whitespace and comments allowed). Throws ParseError.
HtmlNode parse_html_fragment(std::string_view html);

// Explicit role attribute (first token) wins, then the bundled HTML to ARIA
// mapping by tag, then "generic".
std::string infer_role(std::string_view outer_html);
std::string role_for_element(const HtmlNode& element);

// aria-label when present and non-blank, then img alt or button-like input
// value, then the whitespace-normalized text content excluding hidden
// subtrees, then placeholder or title.
std::string infer_name(std::string_view outer_html);
std::string name_for_element(const HtmlNode& element);

std::string decode_entities(std::string_view s);

}  // namespace cogweb::obs
