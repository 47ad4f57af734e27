#include "cogweb/evaluator/evaluator.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "cogweb/error.hpp"
#include "cogweb/taskgen/families.hpp"

namespace cogweb::eval {

std::vector<std::string> rouge_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c) || std::ispunct(c)) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += static_cast<char>(std::tolower(c));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

namespace {

// Bit-parallel LCS for references of at most 64 tokens: bit j of v is zero
// where the LCS row increases.
template <typename T>
std::size_t lcs_bits(std::span<const T> a, std::span<const T> b) {
  std::array<const T*, 64> symbols{};
  std::array<std::uint64_t, 64> masks{};
  std::size_t distinct = 0;
  for (std::size_t j = 0; j < b.size(); ++j) {
    std::size_t k = 0;
    while (k < distinct && !(*symbols[k] == b[j])) ++k;
    if (k == distinct) symbols[distinct++] = &b[j];
    masks[k] |= std::uint64_t{1} << j;
  }
  const std::uint64_t all = b.size() == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << b.size()) - 1;
  std::uint64_t v = all;
  for (const auto& x : a) {
    std::size_t k = 0;
    while (k < distinct && !(*symbols[k] == x)) ++k;
    if (k == distinct) continue;
    const std::uint64_t u = v & masks[k];
    v = ((v + u) | (v - u)) & all;
  }
  return b.size() - static_cast<std::size_t>(std::popcount(v));
}

template <typename T>
std::size_t lcs(std::span<const T> a, std::span<const T> b) {
  if (a.empty() || b.empty()) return 0;
  if (b.size() <= 64) return lcs_bits(a, b);
  std::vector<std::size_t> row(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = 0;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = a[i - 1] == b[j - 1] ? diag + 1 : std::max(row[j], row[j - 1]);
      diag = up;
    }
  }
  return row[b.size()];
}

RougeDetail detail_from(std::size_t l, std::size_t m, std::size_t n) {
  RougeDetail d{l, m, n, 0, 0, 0};
  if (m == 0 || n == 0 || l == 0) return d;
  d.precision = double(l) / double(m);
  d.recall = double(l) / double(n);
  // 2PR/(P+R) == 2L/(m+n)
  d.f1 = double(2 * l) / double(m + n);
  return d;
}

}  // namespace

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) { return lcs(a, b); }
std::size_t lcs_length(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) { return lcs(a, b); }

RougeDetail rouge_l(std::string_view pred, std::string_view ref) {
  const auto p = rouge_tokens(pred);
  const auto r = rouge_tokens(ref);
  return detail_from(lcs_length(std::span<const std::string>(p), std::span<const std::string>(r)), p.size(),
                     r.size());
}

double rouge_l_f1(std::string_view pred, std::string_view ref) { return rouge_l(pred, ref).f1; }

double rouge_l_f1_tokens(std::span<const std::uint8_t> pred, std::span<const std::uint8_t> ref) {
  return detail_from(lcs_length(pred, ref), pred.size(), ref.size()).f1;
}

std::string normalize_answer(std::string_view s) { return to_lower(collapse_whitespace(s)); }

bool exact_match(std::string_view pred, std::string_view gold) { return normalize_answer(pred) == normalize_answer(gold); }

std::vector<std::string> parse_label_set(std::string_view prediction) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty() && cur != "and") out.push_back(cur);
    cur.clear();
  };
  for (char ch : prediction) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c) || ch == ',' || ch == ';' || ch == '[' || ch == ']' || ch == '{' || ch == '}') {
      flush();
    } else {
      cur += static_cast<char>(std::tolower(c));
    }
  }
  flush();
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

std::string gold_text(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

}  // namespace

Score score_instance(const tasks::TaskInstance& inst, const std::string& prediction, model::ModelClient* judge_client,
                     const model::JudgeOptions& judge_options, double judge_per_point) {
  Score s{inst.task_id, inst.family, inst.metric, 0, json::object()};
  const auto metric = tasks::parse_metric(inst.metric);
  if (!metric) throw Error(Errc::SchemaError, "unknown metric '" + inst.metric + "'");
  switch (*metric) {
    case tasks::Metric::RougeL: {
      const auto d = rouge_l(prediction, gold_text(inst.gold.value));
      s.value = d.f1 * 100.0;
      s.detail = {{"lcs", d.lcs}, {"precision", d.precision}, {"recall", d.recall}, {"f1", d.f1}};
      break;
    }
    case tasks::Metric::Accuracy: {
      bool hit = false;
      if (inst.gold.kind == "strategy_set") {
        const auto got = parse_label_set(prediction);
        for (const auto& subset : inst.gold.value) {
          std::vector<std::string> want;
          for (const auto& label : subset) want.push_back(to_lower(trim(gold_text(label))));
          std::sort(want.begin(), want.end());
          if (!got.empty() && got == want) hit = true;
        }
      } else {
        hit = exact_match(prediction, gold_text(inst.gold.value));
      }
      s.value = hit ? 100.0 : 0.0;
      s.detail = {{"correct", hit}};
      break;
    }
    case tasks::Metric::LvmJudge: {
      if (!judge_client) throw Error(Errc::JudgeUnreachable, "no judge endpoint configured for " + inst.task_id);
      const int score = model::judge(*judge_client, prediction, gold_text(inst.gold.value), {}, judge_options);
      s.value = std::clamp(model::judge_percentage(score, judge_per_point), 0.0, 100.0);
      s.detail = {{"judge_score", score}};
      break;
    }
    case tasks::Metric::SuccessRate: {
      const bool ok = exact_match(prediction, "1") || exact_match(prediction, "success");
      s.value = ok ? 100.0 : 0.0;
      s.detail = {{"reward", ok ? 1 : 0}};
      break;
    }
  }
  return s;
}

double round_half_up(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::floor(value * scale + 0.5 + 1e-9) / scale;
}

Report aggregate(std::span<const Score> scores) {
  if (scores.empty()) throw Error(Errc::EmptyInput, "no scores to aggregate");
  std::map<std::string, double> sums;
  Report r;
  for (const auto& s : scores) {
    sums[s.family] += s.value;
    ++r.counts[s.family];
  }
  for (const auto& [family, sum] : sums) r.per_task[family] = sum / r.counts[family];

  std::map<std::string, std::pair<double, int>> cognition;
  double total = 0;
  int present = 0;
  for (const auto* f : tasks::bench_families()) {
    const auto it = r.per_task.find(std::string(f->id));
    if (it == r.per_task.end()) {
      r.missing_families.emplace_back(f->id);
      continue;
    }
    auto& c = cognition[std::string(tasks::cognition_name(f->bench->cognition))];
    c.first += it->second;
    ++c.second;
    total += it->second;
    ++present;
  }
  for (const auto& [name, acc] : cognition) r.per_cognition[name] = acc.first / acc.second;
  if (present > 0) r.overall = total / present;
  return r;
}

json to_json(const Report& r, bool rounded) {
  auto fmt = [rounded](double v) { return rounded ? round_half_up(v) : v; };
  json per_task = json::object(), per_cog = json::object();
  for (const auto& [k, v] : r.per_task) per_task[k] = fmt(v);
  for (const auto& [k, v] : r.per_cognition) per_cog[k] = fmt(v);
  return {{"per_task", per_task},
          {"per_cognition", per_cog},
          {"overall", r.overall ? json(fmt(*r.overall)) : json(nullptr)},
          {"counts", r.counts},
          {"missing_families", r.missing_families}};
}

std::string report_csv(const Report& r) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(1);
  out << "scope,name,value,count\n";
  for (const auto* f : tasks::bench_families()) {
    const auto it = r.per_task.find(std::string(f->id));
    if (it == r.per_task.end()) continue;
    out << "task," << f->id << ',' << round_half_up(it->second) << ',' << r.counts.at(it->first) << '\n';
  }
  for (const auto& [k, v] : r.per_task) {
    const auto* f = tasks::find_family(k);
    if (f && f->bench) continue;
    out << "task," << k << ',' << round_half_up(v) << ',' << r.counts.at(k) << '\n';
  }
  for (auto c : {tasks::Cognition::Memorizing, tasks::Cognition::Understanding, tasks::Cognition::Exploring}) {
    const auto it = r.per_cognition.find(std::string(tasks::cognition_name(c)));
    if (it != r.per_cognition.end()) out << "cognition," << it->first << ',' << round_half_up(it->second) << ",\n";
  }
  if (r.overall) out << "overall,overall," << round_half_up(*r.overall) << ",\n";
  return out.str();
}

double success_rate(std::span<const int> rewards) {
  if (rewards.empty()) throw Error(Errc::EmptyInput, "no trajectories");
  const auto wins = std::count(rewards.begin(), rewards.end(), 1);
  return 100.0 * double(wins) / double(rewards.size());
}

ManifestReport validate_manifest(std::string_view jsonl, bool bench) {
  ManifestReport r;
  std::size_t lineno = 0;
  std::set<std::string> ids;
  for (const auto& raw : split_lines(jsonl)) {
    ++lineno;
    const std::string line = trim(raw);
    if (line.empty()) continue;
    tasks::TaskInstance t;
    try {
      t = tasks::task_from_json(json::parse(line));
    } catch (const json::exception& e) {
      r.schema_errors.push_back({lineno, "", std::string("SchemaError: ") + e.what()});
      continue;
    } catch (const Error& e) {
      r.schema_errors.push_back({lineno, "", e.what()});
      continue;
    }
    ++r.counts[t.family];
    ++r.total;
    if (!ids.insert(t.task_id).second) r.mismatches.push_back({lineno, t.task_id, "duplicate task_id"});
    if (auto why = tasks::check_instance(t, bench); !why.empty()) r.mismatches.push_back({lineno, t.task_id, why});
    r.instances.push_back(std::move(t));
  }
  return r;
}

json to_json(const ManifestReport& r) {
  auto issues = [](const std::vector<ManifestIssue>& v) {
    json a = json::array();
    for (const auto& i : v) a.push_back({{"line", i.line}, {"task_id", i.task_id}, {"message", i.message}});
    return a;
  };
  return {{"counts", r.counts},
          {"total", r.total},
          {"schema_errors", issues(r.schema_errors)},
          {"mismatches", issues(r.mismatches)}};
}

}  // namespace cogweb::eval
