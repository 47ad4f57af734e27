#include "cogweb/observation/ax_tree.hpp"

#include <set>
#include <unordered_set>

#include "cogweb/error.hpp"

namespace cogweb::obs {

const AXNode* AXTree::find(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= nodes.size()) return nullptr;
  const auto& n = nodes[static_cast<std::size_t>(id)];
  if (n.id == id) return &n;
  for (const auto& m : nodes) {
    if (m.id == id) return &m;
  }
  return nullptr;
}

std::optional<std::int64_t> AXTree::backend_of(int id) const {
  const auto* n = find(id);
  if (!n) return std::nullopt;
  return n->backend_id;
}

int AXTree::parent_of(std::size_t index) const {
  const int depth = nodes[index].depth;
  for (std::size_t i = index; i-- > 0;) {
    if (nodes[i].depth < depth) return static_cast<int>(i);
  }
  return -1;
}

bool is_interactive_role(std::string_view role) {
  static const std::set<std::string, std::less<>> roles = {"button",   "link",   "checkbox", "radio",
                                                           "combobox", "textbox", "tab",     "menuitem",
                                                           "switch",   "slider", "option",  "searchbox"};
  return roles.count(role) > 0;
}

void renumber(AXTree& tree) {
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) tree.nodes[i].id = static_cast<int>(i);
}

bool is_well_formed(const AXTree& tree, std::string* why) {
  auto fail = [why](std::string msg) {
    if (why) *why = std::move(msg);
    return false;
  };
  std::unordered_set<std::int64_t> backends;
  int prev_depth = -1;
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    const auto& n = tree.nodes[i];
    if (n.id != static_cast<int>(i)) return fail("id " + std::to_string(n.id) + " at position " + std::to_string(i));
    if (n.depth < 0 || n.depth > prev_depth + 1) return fail("depth jump at id " + std::to_string(n.id));
    if (i == 0 && n.depth != 0) return fail("first node not at depth 0");
    if (n.backend_id != 0 && !backends.insert(n.backend_id).second) {
      return fail("backend id " + std::to_string(n.backend_id) + " repeated");
    }
    prev_depth = n.depth;
  }
  return true;
}

namespace {

const std::set<std::string, std::less<>> kWrapperRoles = {"generic", "none", "InlineTextBox", "Ignored", ""};

const std::set<std::string, std::less<>> kStateProperties = {
    "checked",  "expanded", "selected", "disabled",        "pressed", "focused", "required",
    "invalid",  "readonly", "modal",    "multiselectable", "busy",    "value",   "level"};

std::vector<std::string> states_from_flags(const std::vector<std::pair<std::string, std::string>>& flags) {
  std::vector<std::string> out;
  for (const auto& [flag, value] : flags) {
    if (!kStateProperties.count(flag)) continue;
    if (value == "true") {
      out.push_back(flag);
    } else if (value == "false" || value.empty()) {
      continue;
    } else {
      out.push_back(flag + "=" + value);
    }
  }
  return out;
}

void emit(const browser::RawAXNode& raw, int depth, const std::string& parent_name, bool is_root, AXTree& out) {
  const bool inline_box = raw.role == "InlineTextBox";
  const bool wrapper = kWrapperRoles.count(raw.role) && raw.name.empty();
  const bool echo = raw.role == "StaticText" && !parent_name.empty() && raw.name == parent_name;
  if (!is_root && (inline_box || wrapper || echo)) {
    if (inline_box || echo) return;
    for (const auto& c : raw.children) emit(c, depth, parent_name, false, out);
    return;
  }
  AXNode node;
  node.id = static_cast<int>(out.nodes.size());
  node.role = raw.role;
  node.name = raw.name;
  node.description = raw.description;
  node.states = states_from_flags(raw.state_flags);
  node.depth = depth;
  node.backend_id = raw.backend_id;
  out.nodes.push_back(std::move(node));
  for (const auto& c : raw.children) emit(c, depth + 1, raw.name, false, out);
}

void append_escaped(std::string& out, std::string_view s, bool in_state) {
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\'': out += "\\'"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case ',':
      case '(':
      case ')':
        if (in_state) out += '\\';
        out += c;
        break;
      default: out += c;
    }
  }
}

}  // namespace

AXTree normalize_ax(const browser::RawAXNode& raw) {
  AXTree out;
  emit(raw, 0, "", true, out);
  return out;
}

std::string serialize_ax_line(const AXNode& node) {
  std::string line(static_cast<std::size_t>(node.depth) * 2, ' ');
  line += '[';
  line += std::to_string(node.id);
  line += "] ";
  line += node.role;
  line += " '";
  append_escaped(line, node.name, false);
  line += '\'';
  if (!node.states.empty()) {
    line += " (";
    for (std::size_t i = 0; i < node.states.size(); ++i) {
      if (i) line += ',';
      append_escaped(line, node.states[i], true);
    }
    line += ')';
  }
  return line;
}

std::string serialize_ax(const AXTree& tree) {
  std::string out;
  for (const auto& n : tree.nodes) {
    out += serialize_ax_line(n);
    out += '\n';
  }
  return out;
}

namespace {

[[noreturn]] void bad_line(std::size_t lineno, const std::string& why) {
  throw Error(Errc::ParseError, "ax line " + std::to_string(lineno) + ": " + why);
}

char unescape_char(char c) {
  switch (c) {
    case 'n': return '\n';
    case 'r': return '\r';
    default: return c;
  }
}

}  // namespace

AXTree parse_ax_text(std::string_view text) {
  AXTree tree;
  std::size_t lineno = 0;
  for (const auto& raw_line : split_lines(text)) {
    ++lineno;
    if (raw_line.empty()) continue;
    std::string_view line = raw_line;
    std::size_t pos = 0;
    while (pos < line.size() && line[pos] == ' ') ++pos;
    if (pos % 2 != 0) bad_line(lineno, "odd indentation");
    AXNode node;
    node.depth = static_cast<int>(pos / 2);
    if (pos >= line.size() || line[pos] != '[') bad_line(lineno, "missing [id]");
    const auto close = line.find(']', pos);
    if (close == std::string_view::npos) bad_line(lineno, "unterminated id");
    try {
      std::size_t used = 0;
      const std::string id_text(line.substr(pos + 1, close - pos - 1));
      node.id = std::stoi(id_text, &used);
      if (used != id_text.size() || node.id < 0) bad_line(lineno, "bad id");
    } catch (const std::logic_error&) {
      bad_line(lineno, "bad id");
    }
    pos = close + 1;
    if (pos >= line.size() || line[pos] != ' ') bad_line(lineno, "expected space after id");
    ++pos;
    const auto role_end = line.find(' ', pos);
    if (role_end == std::string_view::npos) bad_line(lineno, "missing name");
    node.role = std::string(line.substr(pos, role_end - pos));
    pos = role_end + 1;
    if (pos >= line.size() || line[pos] != '\'') bad_line(lineno, "name must be quoted");
    ++pos;
    bool closed = false;
    while (pos < line.size()) {
      const char c = line[pos++];
      if (c == '\\' && pos < line.size()) {
        node.name += unescape_char(line[pos++]);
      } else if (c == '\'') {
        closed = true;
        break;
      } else {
        node.name += c;
      }
    }
    if (!closed) bad_line(lineno, "unterminated name");
    if (pos < line.size()) {
      if (line.substr(pos, 2) != " (" || line.back() != ')') bad_line(lineno, "malformed state list");
      pos += 2;
      std::string cur;
      bool done = false;
      while (pos < line.size()) {
        const char c = line[pos++];
        if (c == '\\' && pos < line.size()) {
          cur += unescape_char(line[pos++]);
        } else if (c == ',') {
          node.states.push_back(std::move(cur));
          cur.clear();
        } else if (c == ')') {
          node.states.push_back(std::move(cur));
          done = true;
          break;
        } else {
          cur += c;
        }
      }
      if (!done || pos != line.size()) bad_line(lineno, "malformed state list");
    }
    tree.nodes.push_back(std::move(node));
  }
  return tree;
}

json to_json(const ElementMeta& m) {
  return {{"css", m.css},
          {"allcss", m.allcss},
          {"outer_html", m.outer_html},
          {"location", {m.location.x, m.location.y, m.location.w, m.location.h}},
          {"role", m.role},
          {"name", m.name}};
}

ElementMeta element_meta_from_json(const json& j) {
  ElementMeta m;
  m.css = j.value("css", "");
  m.allcss = j.value("allcss", "");
  m.outer_html = j.value("outer_html", "");
  const auto& loc = j.at("location");
  m.location = {loc.at(0).get<int>(), loc.at(1).get<int>(), loc.at(2).get<int>(), loc.at(3).get<int>()};
  m.role = j.value("role", "");
  m.name = j.value("name", "");
  return m;
}

Observation compose_observation(browser::BrowserSession& session, int step, bool with_bounds) {
  Observation obs;
  obs.step = step;
  for (int attempt = 0; attempt < 3; ++attempt) {
    AXTree before = normalize_ax(session.fetch_raw_ax());
    obs.screenshot = session.capture_screenshot();
    AXTree after = normalize_ax(session.fetch_raw_ax());
    const std::string before_text = serialize_ax(before);
    obs.ax_text = serialize_ax(after);
    obs.ax = std::move(after);
    if (before_text == obs.ax_text) break;
  }
  if (with_bounds) {
    for (auto& n : obs.ax.nodes) {
      if (n.backend_id != 0 && n.depth > 0) n.bbox = session.node_bounds(n.backend_id);
    }
  }
  obs.url = session.current_url();
  return obs;
}

}  // namespace cogweb::obs
