#pragma once

#include <array>
#include <string>
#include <string_view>

namespace cogweb::agent {

inline constexpr std::array<std::string_view, 6> kThoughtSections = {
    "Webpage Layout Description", "Key Element Analysis", "Task Recap",
    "Task Decomposition",         "Step-by-Step Reasoning", "Final Action Summary"};

struct Thought {
  std::array<std::string, 6> sections;  // in kThoughtSections order; missing ones stay empty
  std::string raw;
  bool has_final_section = false;

  const std::string& section(std::string_view heading) const;
  const std::string& final_action_summary() const { return sections[5]; }
};

// Lenient: headings may carry markdown decoration and a trailing colon, and
// any subset may be missing. Text before the first heading is ignored.
Thought parse_thought(std::string_view raw);

std::string render_thought(const Thought& t);

}  // namespace cogweb::agent
