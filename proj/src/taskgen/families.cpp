#include "cogweb/taskgen/families.hpp"

namespace cogweb::tasks {

std::string_view knowledge_name(Knowledge k) {
  switch (k) {
    case Knowledge::Factual: return "factual";
    case Knowledge::Conceptual: return "conceptual";
    case Knowledge::Procedural: return "procedural";
  }
  return "?";
}

std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::RougeL: return "rouge_l";
    case Metric::Accuracy: return "accuracy";
    case Metric::LvmJudge: return "lvm_judge";
    case Metric::SuccessRate: return "success_rate";
  }
  return "?";
}

std::string_view cognition_name(Cognition c) {
  switch (c) {
    case Cognition::Memorizing: return "Memorizing";
    case Cognition::Understanding: return "Understanding";
    case Cognition::Exploring: return "Exploring";
  }
  return "?";
}

std::optional<Knowledge> parse_knowledge(std::string_view s) {
  for (auto k : {Knowledge::Factual, Knowledge::Conceptual, Knowledge::Procedural}) {
    if (knowledge_name(k) == s) return k;
  }
  return std::nullopt;
}

std::optional<Metric> parse_metric(std::string_view s) {
  for (auto m : {Metric::RougeL, Metric::Accuracy, Metric::LvmJudge, Metric::SuccessRate}) {
    if (metric_name(m) == s) return m;
  }
  return std::nullopt;
}

const std::vector<FamilyInfo>& families() {
  using enum Knowledge;
  using enum Metric;
  using enum Cognition;
  static const std::vector<FamilyInfo> table = {
      {"element_attribute_recognition", "Element Attribute Recognition", Factual, {RougeL},
       BenchBinding{Memorizing, RougeL, 249}},
      {"sub_elements_prediction", "Sub-elements Prediction", Factual, {RougeL}, std::nullopt},
      {"page_change_prediction", "Page Change Prediction", Factual, {RougeL}, std::nullopt},
      {"next_page_prediction", "Next Page Prediction", Factual, {Accuracy, RougeL},
       BenchBinding{Memorizing, Accuracy, 93}},
      {"source_element_prediction", "Source Element Prediction", Factual, {Accuracy},
       BenchBinding{Memorizing, Accuracy, 32}},
      {"element_understanding", "Element Understanding", Conceptual, {LvmJudge},
       BenchBinding{Understanding, LvmJudge, 200}},
      {"webpage_understanding", "WebPage Understanding", Conceptual, {LvmJudge},
       BenchBinding{Understanding, LvmJudge, 77}},
      {"caption_qa", "Caption & QA", Conceptual, {RougeL, LvmJudge}, std::nullopt},
      {"user_intention_prediction", "User's Intention Prediction", Procedural, {LvmJudge},
       BenchBinding{Exploring, LvmJudge, 105}},
      {"popup_close", "Popup Close", Procedural, {Accuracy}, BenchBinding{Exploring, Accuracy, 58}},
      {"single_step_web_task", "Single Step Exploration", Procedural, {Accuracy},
       BenchBinding{Exploring, Accuracy, 62}},
      {"noisy_multi_step_web_task", "Noisy Multi-Steps Web Task", Procedural, {SuccessRate}, std::nullopt},
  };
  return table;
}

const FamilyInfo* find_family(std::string_view id) {
  for (const auto& f : families()) {
    if (f.id == id) return &f;
  }
  return nullptr;
}

std::vector<const FamilyInfo*> bench_families() {
  std::vector<const FamilyInfo*> out;
  for (const auto& f : families()) {
    if (f.bench) out.push_back(&f);
  }
  return out;
}

}  // namespace cogweb::tasks
