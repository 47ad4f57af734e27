#include "cogweb/agent/thought.hpp"

#include <cctype>

#include "cogweb/util.hpp"

namespace cogweb::agent {

namespace {

// Index of the heading a line opens, plus any text after the colon.
int heading_of(const std::string& line, std::string* remainder) {
  std::size_t i = 0;
  while (i < line.size() && (line[i] == '#' || line[i] == '*' || line[i] == ' ' || line[i] == '\t' ||
                             line[i] == '-' || std::isdigit(static_cast<unsigned char>(line[i])) || line[i] == '.')) {
    ++i;
  }
  const std::string lower = to_lower(std::string_view(line).substr(i));
  for (std::size_t h = 0; h < kThoughtSections.size(); ++h) {
    const std::string name = to_lower(kThoughtSections[h]);
    if (lower.rfind(name, 0) != 0) continue;
    std::size_t j = name.size();
    while (j < lower.size() && (lower[j] == '*' || lower[j] == ' ' || lower[j] == '#')) ++j;
    if (j < lower.size() && lower[j] == ':') {
      ++j;
    } else if (j < lower.size()) {
      continue;
    }
    *remainder = trim(std::string_view(line).substr(i + j));
    while (!remainder->empty() && remainder->front() == '*') remainder->erase(remainder->begin());
    *remainder = trim(*remainder);
    return static_cast<int>(h);
  }
  return -1;
}

}  // namespace

const std::string& Thought::section(std::string_view heading) const {
  static const std::string empty;
  for (std::size_t i = 0; i < kThoughtSections.size(); ++i) {
    if (kThoughtSections[i] == heading) return sections[i];
  }
  return empty;
}

Thought parse_thought(std::string_view raw) {
  Thought t;
  t.raw = std::string(raw);
  int current = -1;
  for (const auto& line : split_lines(raw)) {
    std::string rest;
    const int h = heading_of(line, &rest);
    if (h >= 0) {
      current = h;
      if (h == 5) t.has_final_section = true;
      if (!rest.empty()) t.sections[h] += rest + "\n";
      continue;
    }
    if (current >= 0) t.sections[current] += line + "\n";
  }
  for (auto& s : t.sections) s = trim(s);
  return t;
}

std::string render_thought(const Thought& t) {
  std::string out;
  for (std::size_t i = 0; i < kThoughtSections.size(); ++i) {
    out += "## ";
    out += kThoughtSections[i];
    out += "\n";
    out += t.sections[i];
    out += "\n\n";
  }
  return out;
}

}  // namespace cogweb::agent
