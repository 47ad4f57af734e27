#pragma once

#include <string>
#include <vector>

#include "cogweb/util.hpp"

namespace cogweb::tasks {

inline constexpr std::string_view kTaskSchema = "cogweb/task/v1";

struct Choice {
  std::string label;
  std::string image;  // relative to the dataset root
  std::string text;

  friend bool operator==(const Choice&, const Choice&) = default;
};

// kind is one of: text, choice, element_id, action, strategy_set.
// strategy_set values are lists of method-label lists.
struct Gold {
  std::string kind = "text";
  json value;

  friend bool operator==(const Gold&, const Gold&) = default;
};

struct TaskInstance {
  std::string task_id;
  std::string family;
  std::string knowledge;
  std::vector<std::string> images;
  std::string prompt;
  std::vector<Choice> choices;
  Gold gold;
  std::string metric;
  json source = json::object();

  friend bool operator==(const TaskInstance&, const TaskInstance&) = default;
};

json to_json(const TaskInstance& t);
// Throws SchemaError on missing or mistyped fields.
TaskInstance task_from_json(const json& j);

// Empty when the instance agrees with the family tables; otherwise a
// description of the mismatch. In bench mode the metric must be the
// benchmark binding rather than any metric valid for the family.
std::string check_instance(const TaskInstance& t, bool bench = false);

}  // namespace cogweb::tasks
