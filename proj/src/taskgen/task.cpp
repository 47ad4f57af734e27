#include "cogweb/taskgen/task.hpp"

#include <algorithm>

#include "cogweb/error.hpp"
#include "cogweb/taskgen/families.hpp"

namespace cogweb::tasks {

json to_json(const TaskInstance& t) {
  json choices = json::array();
  for (const auto& c : t.choices) {
    json cj = {{"label", c.label}};
    if (!c.image.empty()) cj["image"] = c.image;
    if (!c.text.empty()) cj["text"] = c.text;
    choices.push_back(std::move(cj));
  }
  json inputs = {{"images", t.images}, {"prompt", t.prompt}};
  if (!t.choices.empty()) inputs["choices"] = choices;
  return {{"schema", kTaskSchema},
          {"task_id", t.task_id},
          {"family", t.family},
          {"knowledge", t.knowledge},
          {"inputs", inputs},
          {"gold", {{"kind", t.gold.kind}, {"value", t.gold.value}}},
          {"metric", t.metric},
          {"source", t.source}};
}

namespace {

const json& field(const json& j, const char* key, json::value_t type) {
  if (!j.is_object() || !j.contains(key)) throw Error(Errc::SchemaError, std::string("missing field '") + key + "'");
  const json& v = j.at(key);
  if (v.type() != type) throw Error(Errc::SchemaError, std::string("field '") + key + "' has the wrong type");
  return v;
}

std::string str(const json& j, const char* key) { return field(j, key, json::value_t::string).get<std::string>(); }

}  // namespace

TaskInstance task_from_json(const json& j) {
  if (!j.is_object()) throw Error(Errc::SchemaError, "task line is not an object");
  if (j.contains("schema") && j["schema"] != kTaskSchema) {
    throw Error(Errc::SchemaError, "unsupported schema " + j["schema"].dump());
  }
  TaskInstance t;
  t.task_id = str(j, "task_id");
  t.family = str(j, "family");
  t.knowledge = str(j, "knowledge");
  t.metric = str(j, "metric");
  const json& inputs = field(j, "inputs", json::value_t::object);
  for (const auto& img : field(inputs, "images", json::value_t::array)) {
    if (!img.is_string()) throw Error(Errc::SchemaError, "image paths must be strings");
    t.images.push_back(img.get<std::string>());
  }
  t.prompt = str(inputs, "prompt");
  if (inputs.contains("choices")) {
    for (const auto& c : field(inputs, "choices", json::value_t::array)) {
      Choice ch;
      ch.label = str(c, "label");
      ch.image = c.value("image", "");
      ch.text = c.value("text", "");
      t.choices.push_back(std::move(ch));
    }
  }
  const json& gold = field(j, "gold", json::value_t::object);
  t.gold.kind = str(gold, "kind");
  if (!gold.contains("value")) throw Error(Errc::SchemaError, "missing field 'value'");
  t.gold.value = gold.at("value");
  static const std::vector<std::string> kinds = {"text", "choice", "element_id", "action", "strategy_set"};
  if (std::find(kinds.begin(), kinds.end(), t.gold.kind) == kinds.end()) {
    throw Error(Errc::SchemaError, "unknown gold kind '" + t.gold.kind + "'");
  }
  if (j.contains("source")) t.source = j.at("source");
  return t;
}

std::string check_instance(const TaskInstance& t, bool bench) {
  const FamilyInfo* f = find_family(t.family);
  if (!f) return "unknown family '" + t.family + "'";
  if (knowledge_name(f->knowledge) != t.knowledge) {
    return "knowledge '" + t.knowledge + "' does not match family " + t.family;
  }
  const auto metric = parse_metric(t.metric);
  if (!metric) return "unknown metric '" + t.metric + "'";
  if (bench) {
    if (!f->bench) return "family " + t.family + " is not part of the benchmark";
    if (f->bench->metric != *metric) return "metric '" + t.metric + "' does not match benchmark family " + t.family;
  } else if (std::find(f->metrics.begin(), f->metrics.end(), *metric) == f->metrics.end()) {
    return "metric '" + t.metric + "' does not match family " + t.family;
  }
  if (t.gold.kind == "choice") {
    if (t.choices.empty()) return "choice gold without choices";
    const bool found = std::any_of(t.choices.begin(), t.choices.end(),
                                   [&](const Choice& c) { return t.gold.value == c.label; });
    if (!found) return "gold label is not among the choices";
  } else if (!t.choices.empty()) {
    return "choices present on a non-choice instance";
  }
  return {};
}

}  // namespace cogweb::tasks
