#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "cogweb/browser/session.hpp"

namespace cogweb::agent {

struct Click {
  int id = 0;
  friend bool operator==(const Click&, const Click&) = default;
};
struct Type {
  int id = 0;
  std::string content;
  friend bool operator==(const Type&, const Type&) = default;
};
struct Scroll {
  std::optional<int> id;  // nullopt scrolls the window
  browser::ScrollDirection direction = browser::ScrollDirection::Down;
  friend bool operator==(const Scroll&, const Scroll&) = default;
};
struct DbClick {
  int id = 0;
  friend bool operator==(const DbClick&, const DbClick&) = default;
};
struct GoBack {
  friend bool operator==(const GoBack&, const GoBack&) = default;
};
struct GoForward {
  friend bool operator==(const GoForward&, const GoForward&) = default;
};
struct Stop {
  std::string content;
  friend bool operator==(const Stop&, const Stop&) = default;
};
struct Restart {
  friend bool operator==(const Restart&, const Restart&) = default;
};
struct Wait {
  friend bool operator==(const Wait&, const Wait&) = default;
};

using Action = std::variant<Click, Type, Scroll, DbClick, GoBack, GoForward, Stop, Restart, Wait>;

// Parses one action line, e.g. "click [12]", "type [5] [hotels]",
// "scroll [WINDOW] [down]", "stop [Answer: [42]]". Verbs and the WINDOW /
// up / down keywords are case-insensitive. Type and Stop content runs from
// the bracket after the id (or verb) to the last ']' of the line.
// Throws Unparseable.
Action parse_action_line(std::string_view line);

// Picks the action line from a full model reply: the last nonempty line of
// the Final Action Summary section if present, else the last nonempty line.
Action parse_action(std::string_view text);
std::string action_line(std::string_view text);

std::string format_action(const Action& a);

std::string_view action_verb(const Action& a);

}  // namespace cogweb::agent
