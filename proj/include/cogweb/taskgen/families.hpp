#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cogweb::tasks {

enum class Knowledge { Factual, Conceptual, Procedural };
enum class Metric { RougeL, Accuracy, LvmJudge, SuccessRate };
enum class Cognition { Memorizing, Understanding, Exploring };

std::string_view knowledge_name(Knowledge k);
std::string_view metric_name(Metric m);
std::string_view cognition_name(Cognition c);
std::optional<Knowledge> parse_knowledge(std::string_view s);
std::optional<Metric> parse_metric(std::string_view s);

struct BenchBinding {
  Cognition cognition;
  Metric metric;
  int count;  // instances in the reference benchmark
};

struct FamilyInfo {
  std::string_view id;
  std::string_view title;
  Knowledge knowledge;
  std::vector<Metric> metrics;  // metrics valid for dataset instances
  std::optional<BenchBinding> bench;
};

// All twelve families in dataset order.
const std::vector<FamilyInfo>& families();
const FamilyInfo* find_family(std::string_view id);
// The eight benchmark families in report order.
std::vector<const FamilyInfo*> bench_families();

}  // namespace cogweb::tasks
