#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cogweb/model/client.hpp"
#include "cogweb/taskgen/task.hpp"

namespace cogweb::eval {

// Lowercased tokens split at whitespace and ASCII punctuation.
std::vector<std::string> rouge_tokens(std::string_view text);

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);
std::size_t lcs_length(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

struct RougeDetail {
  std::size_t lcs = 0;
  std::size_t pred_len = 0;
  std::size_t ref_len = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

RougeDetail rouge_l(std::string_view pred, std::string_view ref);
double rouge_l_f1(std::string_view pred, std::string_view ref);
// Same metric over pre-tokenized sequences.
double rouge_l_f1_tokens(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> ref);

std::string normalize_answer(std::string_view s);
bool exact_match(std::string_view pred, std::string_view gold);

struct Score {
  std::string task_id;
  std::string family;
  std::string metric;
  double value = 0;
  json detail = json::object();
};

// Dispatches on the instance metric: rouge_l -> F1 x 100, accuracy -> 100/0,
// lvm_judge -> judge score x per_point. A judge client is required only
// for lvm_judge instances.
Score score_instance(const tasks::TaskInstance& inst, const std::string& prediction,
                     model::ModelClient* judge_client = nullptr, const model::JudgeOptions& judge_options = {},
                     double judge_per_point = 20.0);

// Popup-close answers: the set of method labels named in the prediction.
std::vector<std::string> parse_label_set(std::string_view prediction);

double round_half_up(double value, int decimals = 1);

struct Report {
  std::map<std::string, double> per_task;
  std::map<std::string, double> per_cognition;
  std::optional<double> overall;
  std::map<std::string, int> counts;
  std::vector<std::string> missing_families;
};

// Unweighted means: instance values -> family means -> cognition means;
// overall is the mean of the benchmark family means.
Report aggregate(std::span<const Score> scores);

json to_json(const Report& r, bool rounded = true);
std::string report_csv(const Report& r);

double success_rate(std::span<const int> rewards);

struct ManifestIssue {
  std::size_t line = 0;
  std::string task_id;
  std::string message;
};

struct ManifestReport {
  std::map<std::string, int> counts;
  int total = 0;
  std::vector<ManifestIssue> schema_errors;
  std::vector<ManifestIssue> mismatches;
  std::vector<tasks::TaskInstance> instances;

  bool ok() const { return schema_errors.empty() && mismatches.empty(); }
};

ManifestReport validate_manifest(std::string_view jsonl, bool bench = false);

json to_json(const ManifestReport& r);

}  // namespace cogweb::eval
