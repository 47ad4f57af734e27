#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cogweb/browser/session.hpp"
#include "cogweb/image.hpp"
#include "cogweb/util.hpp"

namespace cogweb::obs {

struct AXNode {
  int id = 0;
  std::string role;
  std::string name;
  std::string description;
  std::vector<std::string> states;
  int depth = 0;
  std::optional<Rect> bbox;
  std::int64_t backend_id = 0;

  friend bool operator==(const AXNode&, const AXNode&) = default;
};

// Nodes are stored in depth-first document order; ids equal vector positions.
struct AXTree {
  std::vector<AXNode> nodes;

  bool empty() const { return nodes.empty(); }
  std::size_t size() const { return nodes.size(); }
  const AXNode* find(int id) const;
  std::optional<std::int64_t> backend_of(int id) const;
  // Index of the parent node, or -1 for top-level nodes.
  int parent_of(std::size_t index) const;

  friend bool operator==(const AXTree&, const AXTree&) = default;
};

// ARIA roles treated as interactive by the crawler and instrumentation.
bool is_interactive_role(std::string_view role);

// Reassigns ids 0..n-1 in vector order.
void renumber(AXTree& tree);

// Checks the structural invariants (consecutive ids, depth steps of at most +1
// from the previous node, unique backend ids where nonzero).
bool is_well_formed(const AXTree& tree, std::string* why = nullptr);

// Prunes unnamed generic/none wrappers (splicing their children into the
// parent), inline text boxes, and static text that repeats its parent's
// name. The root is always kept.
AXTree normalize_ax(const browser::RawAXNode& raw);

// One line per node: two spaces per depth level, then
//   [id] role 'name' (state,state)
// States are omitted with their parentheses when empty. Backslash, quote,
// comma, parenthesis and newline inside names and states are escaped.
std::string serialize_ax(const AXTree& tree);
std::string serialize_ax_line(const AXNode& node);

// Inverse of serialize_ax over (id, role, name, states, depth).
AXTree parse_ax_text(std::string_view text);

// Element metadata captured by the crawler.
struct ElementMeta {
  std::string css;
  std::string allcss;
  std::string outer_html;
  Rect location;
  std::string role;
  std::string name;

  friend bool operator==(const ElementMeta&, const ElementMeta&) = default;
};

json to_json(const ElementMeta& m);
ElementMeta element_meta_from_json(const json& j);

struct Observation {
  Image screenshot;
  AXTree ax;
  std::string ax_text;
  std::string url;
  int step = 1;
};

// Captures screenshot and AX tree from the same settle window. The tree is
// fetched before and after the screenshot and the pair is re-captured when
// the two disagree.
Observation compose_observation(browser::BrowserSession& session, int step, bool with_bounds = true);

}  // namespace cogweb::obs
