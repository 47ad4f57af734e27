#include "cogweb/agent/action.hpp"

#include <cctype>
#include <charconv>

#include "cogweb/agent/thought.hpp"
#include "cogweb/error.hpp"

namespace cogweb::agent {

namespace {

[[noreturn]] void unparseable(std::string_view line, const std::string& why) {
  throw Error(Errc::Unparseable, why + " in '" + std::string(line.substr(0, 120)) + "'");
}

bool iequals(std::string_view a, std::string_view b) { return to_lower(a) == to_lower(b); }

std::string_view skip_spaces(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  return s;
}

// Reads "[...]" with no nested brackets; returns the inside and advances.
std::optional<std::string_view> take_bracket(std::string_view& rest) {
  rest = skip_spaces(rest);
  if (rest.empty() || rest.front() != '[') return std::nullopt;
  const auto close = rest.find(']');
  if (close == std::string_view::npos) return std::nullopt;
  const auto inner = rest.substr(1, close - 1);
  rest.remove_prefix(close + 1);
  return inner;
}

std::optional<int> parse_id(std::string_view s) {
  s = skip_spaces(s);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  int v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || v < 0) return std::nullopt;
  return v;
}

// Content between the next '[' and the final ']' of the line.
std::optional<std::string> take_content(std::string_view rest) {
  rest = skip_spaces(rest);
  if (rest.empty() || rest.front() != '[' || rest.back() != ']' || rest.size() < 2) return std::nullopt;
  return std::string(rest.substr(1, rest.size() - 2));
}

int need_id(std::string_view line, std::string_view& rest) {
  const auto inner = take_bracket(rest);
  if (!inner) unparseable(line, "missing [id]");
  const auto id = parse_id(*inner);
  if (!id) unparseable(line, "id must be a nonnegative integer");
  return *id;
}

void need_end(std::string_view line, std::string_view rest) {
  if (!skip_spaces(rest).empty()) unparseable(line, "unexpected arguments");
}

std::string strip_decoration(std::string_view raw) {
  std::string s = trim(raw);
  while (!s.empty() && s.front() == '`') s.erase(s.begin());
  while (!s.empty() && s.back() == '`') s.pop_back();
  s = trim(s);
  for (std::string_view prefix : {"- ", "* "}) {
    if (s.rfind(prefix, 0) == 0) s = trim(s.substr(prefix.size()));
  }
  for (std::string_view prefix : {"final action:", "action:"}) {
    if (to_lower(s.substr(0, prefix.size())) == prefix) s = trim(s.substr(prefix.size()));
  }
  while (!s.empty() && s.front() == '`') s.erase(s.begin());
  while (!s.empty() && s.back() == '`') s.pop_back();
  return trim(s);
}

}  // namespace

Action parse_action_line(std::string_view raw) {
  const std::string cleaned = strip_decoration(raw);
  const std::string_view line = cleaned;
  std::size_t verb_end = 0;
  while (verb_end < line.size() && !std::isspace(static_cast<unsigned char>(line[verb_end])) && line[verb_end] != '[') {
    ++verb_end;
  }
  const std::string verb = to_lower(line.substr(0, verb_end));
  std::string_view rest = line.substr(verb_end);

  if (verb == "click" || verb == "dbclick") {
    const int id = need_id(line, rest);
    need_end(line, rest);
    if (verb == "click") return Click{id};
    return DbClick{id};
  }
  if (verb == "type") {
    const int id = need_id(line, rest);
    auto content = take_content(rest);
    if (!content) unparseable(line, "type needs [id] [content]");
    if (content->empty()) unparseable(line, "type content is empty");
    return Type{id, std::move(*content)};
  }
  if (verb == "scroll") {
    const auto target = take_bracket(rest);
    const auto dir = take_bracket(rest);
    if (!target || !dir) unparseable(line, "scroll needs [target] [direction]");
    need_end(line, rest);
    Scroll s;
    if (!iequals(trim(*target), "window")) {
      s.id = parse_id(*target);
      if (!s.id) unparseable(line, "scroll target must be an id or WINDOW");
    }
    if (iequals(trim(*dir), "up")) {
      s.direction = browser::ScrollDirection::Up;
    } else if (iequals(trim(*dir), "down")) {
      s.direction = browser::ScrollDirection::Down;
    } else {
      unparseable(line, "scroll direction must be up or down");
    }
    return s;
  }
  if (verb == "stop") {
    auto content = take_content(rest);
    if (!content) unparseable(line, "stop needs [content]");
    return Stop{std::move(*content)};
  }
  if (verb == "go_back" || verb == "go_forward" || verb == "restart" || verb == "wait") {
    need_end(line, rest);
    if (verb == "go_back") return GoBack{};
    if (verb == "go_forward") return GoForward{};
    if (verb == "restart") return Restart{};
    return Wait{};
  }
  unparseable(line, verb.empty() ? "no action" : "unknown action '" + verb + "'");
}

std::string action_line(std::string_view text) {
  const Thought t = parse_thought(text);
  std::string_view source = text;
  if (t.has_final_section && !trim(t.final_action_summary()).empty()) source = t.final_action_summary();
  const auto lines = split_lines(source);
  for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
    if (!trim(*it).empty()) return trim(*it);
  }
  return {};
}

Action parse_action(std::string_view text) { return parse_action_line(action_line(text)); }

std::string format_action(const Action& a) {
  struct V {
    std::string operator()(const Click& c) const { return "click [" + std::to_string(c.id) + "]"; }
    std::string operator()(const Type& t) const { return "type [" + std::to_string(t.id) + "] [" + t.content + "]"; }
    std::string operator()(const Scroll& s) const {
      return "scroll [" + (s.id ? std::to_string(*s.id) : std::string("WINDOW")) + "] [" +
             (s.direction == browser::ScrollDirection::Up ? "up" : "down") + "]";
    }
    std::string operator()(const DbClick& c) const { return "dbclick [" + std::to_string(c.id) + "]"; }
    std::string operator()(const GoBack&) const { return "go_back"; }
    std::string operator()(const GoForward&) const { return "go_forward"; }
    std::string operator()(const Stop& s) const { return "stop [" + s.content + "]"; }
    std::string operator()(const Restart&) const { return "restart"; }
    std::string operator()(const Wait&) const { return "wait"; }
  };
  return std::visit(V{}, a);
}

std::string_view action_verb(const Action& a) {
  static constexpr std::string_view names[] = {"click",      "type", "scroll",  "dbclick", "go_back",
                                               "go_forward", "stop", "restart", "wait"};
  return names[a.index()];
}

}  // namespace cogweb::agent
