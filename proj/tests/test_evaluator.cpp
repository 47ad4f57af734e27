#include <gtest/gtest.h>

#include <random>

#include "cogweb/error.hpp"
#include "cogweb/evaluator/evaluator.hpp"
#include "cogweb/taskgen/families.hpp"
#include "mock_model.hpp"

using namespace cogweb;
using namespace cogweb::eval;

namespace {

// Plain recursive LCS, memoised on (i, j).
std::size_t lcs_oracle(const std::vector<std::string>& a, const std::vector<std::string>& b, std::size_t i,
                       std::size_t j, std::map<std::pair<std::size_t, std::size_t>, std::size_t>& memo) {
  if (i == a.size() || j == b.size()) return 0;
  const auto key = std::make_pair(i, j);
  if (auto it = memo.find(key); it != memo.end()) return it->second;
  std::size_t v = a[i] == b[j] ? 1 + lcs_oracle(a, b, i + 1, j + 1, memo)
                               : std::max(lcs_oracle(a, b, i + 1, j, memo), lcs_oracle(a, b, i, j + 1, memo));
  memo[key] = v;
  return v;
}

tasks::TaskInstance instance(const std::string& family, const std::string& metric, tasks::Gold gold) {
  tasks::TaskInstance t;
  t.task_id = family + "-1";
  t.family = family;
  t.knowledge = std::string(tasks::knowledge_name(tasks::find_family(family)->knowledge));
  t.metric = metric;
  t.prompt = "p";
  t.gold = std::move(gold);
  return t;
}

std::vector<Score> scores_for(const std::vector<double>& per_task) {
  std::vector<Score> out;
  const auto fams = tasks::bench_families();
  for (std::size_t i = 0; i < fams.size(); ++i) {
    // Two instances whose mean is the table value.
    out.push_back({"a" + std::to_string(i), std::string(fams[i]->id), "accuracy", per_task[i] - 1.0});
    out.push_back({"b" + std::to_string(i), std::string(fams[i]->id), "accuracy", per_task[i] + 1.0});
  }
  return out;
}

}  // namespace

TEST(Rouge, Tokenizer) {
  const std::vector<std::string> want = {"role", "button", "name", "add", "to", "cart"};
  EXPECT_EQ(rouge_tokens("Role: button, name: Add-to  CART!"), want);
  EXPECT_TRUE(rouge_tokens(" ,. ").empty());
}

TEST(Rouge, HandComputedCases) {
  // pred 4 tokens, ref 3 tokens, LCS "the cat" = 2 -> F1 = 4/7.
  const auto d = rouge_l("the big cat sat", "the cat ran");
  EXPECT_EQ(d.lcs, 2u);
  EXPECT_DOUBLE_EQ(d.precision, 0.5);
  EXPECT_DOUBLE_EQ(d.recall, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(d.f1, 4.0 / 7.0);
  EXPECT_DOUBLE_EQ(rouge_l_f1("same words", "Same, words."), 1.0);
  EXPECT_DOUBLE_EQ(rouge_l_f1("", "x"), 0.0);
  EXPECT_DOUBLE_EQ(rouge_l_f1("a", ""), 0.0);
  EXPECT_DOUBLE_EQ(rouge_l_f1("a b", "c d"), 0.0);
}

TEST(Rouge, MatchesRecursiveOracle) {
  std::mt19937 gen(11);
  const std::vector<std::string> vocab = {"a", "b", "c", "d"};
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<std::string> p(gen() % 9), r(gen() % 9);
    for (auto& w : p) w = vocab[gen() % vocab.size()];
    for (auto& w : r) w = vocab[gen() % vocab.size()];
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
    const std::size_t l = lcs_oracle(p, r, 0, 0, memo);
    EXPECT_EQ(lcs_length(std::span<const std::string>(p), std::span<const std::string>(r)), l);
    std::string ps, rs;
    for (const auto& w : p) ps += w + " ";
    for (const auto& w : r) rs += w + " ";
    const double want = (p.empty() || r.empty() || l == 0) ? 0.0 : 2.0 * l / double(p.size() + r.size());
    EXPECT_NEAR(rouge_l_f1(ps, rs), want, 1e-12);
  }
}

TEST(Rouge, LongReferencesUseTheSameLcs) {
  std::mt19937 gen(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::uint8_t> p(1 + gen() % 100), r(60 + gen() % 10);
    for (auto& x : p) x = static_cast<std::uint8_t>(gen() % 4);
    for (auto& x : r) x = static_cast<std::uint8_t>(gen() % 4);
    std::vector<std::vector<std::size_t>> t(p.size() + 1, std::vector<std::size_t>(r.size() + 1, 0));
    for (std::size_t i = 1; i <= p.size(); ++i) {
      for (std::size_t j = 1; j <= r.size(); ++j) {
        t[i][j] = p[i - 1] == r[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
      }
    }
    EXPECT_EQ(lcs_length(std::span<const std::uint8_t>(p), std::span<const std::uint8_t>(r)), t[p.size()][r.size()]);
    EXPECT_EQ(lcs_length(std::span<const std::uint8_t>(r), std::span<const std::uint8_t>(p)), t[p.size()][r.size()]);
  }
}

TEST(ExactMatch, NormalizesCaseAndWhitespace) {
  EXPECT_TRUE(exact_match("  b ", "B"));
  EXPECT_TRUE(exact_match("Add  to\tcart", "add to cart"));
  EXPECT_FALSE(exact_match("A.", "A"));
}

TEST(LabelSet, ParsesCommaAndAndSeparatedLabels) {
  const std::vector<std::string> want = {"accept", "close"};
  EXPECT_EQ(parse_label_set("Close, accept"), want);
  EXPECT_EQ(parse_label_set("[accept; close and close]"), want);
  EXPECT_TRUE(parse_label_set("  ").empty());
}

TEST(ScoreInstance, PerMetric) {
  const auto rouge = instance("element_attribute_recognition", "rouge_l", {"text", "role: link, name: Home"});
  EXPECT_DOUBLE_EQ(score_instance(rouge, "role: link, name: Home").value, 100.0);
  EXPECT_NEAR(score_instance(rouge, "link Home").value, 100.0 * 2 * 2 / 6.0, 1e-9);

  const auto mc = instance("next_page_prediction", "accuracy", {"choice", "C"});
  EXPECT_DOUBLE_EQ(score_instance(mc, " c").value, 100.0);
  EXPECT_DOUBLE_EQ(score_instance(mc, "B").value, 0.0);

  auto popup = instance("popup_close", "accuracy", {"strategy_set", json::array({{"accept"}, {"close"}, {"accept", "close"}})});
  EXPECT_DOUBLE_EQ(score_instance(popup, "Close, Accept").value, 100.0);
  EXPECT_DOUBLE_EQ(score_instance(popup, "close").value, 100.0);
  EXPECT_DOUBLE_EQ(score_instance(popup, "reject").value, 0.0);
  EXPECT_DOUBLE_EQ(score_instance(popup, "").value, 0.0);

  const auto judged = instance("element_understanding", "lvm_judge", {"text", "A blue link"});
  cogweb::testing::ScriptedClient judge({"4"});
  const auto s = score_instance(judged, "blue link", &judge);
  EXPECT_DOUBLE_EQ(s.value, 80.0);
  EXPECT_EQ(s.detail["judge_score"], 4);
  try {
    score_instance(judged, "x");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::JudgeUnreachable);
  }
  auto bogus = rouge;
  bogus.metric = "bleu";
  EXPECT_THROW(score_instance(bogus, "x"), Error);
}

TEST(Rounding, HalfUp) {
  EXPECT_DOUBLE_EQ(round_half_up(80.225), 80.2);
  EXPECT_DOUBLE_EQ(round_half_up(46.375), 46.4);
  EXPECT_DOUBLE_EQ(round_half_up(0.25), 0.3);
  EXPECT_DOUBLE_EQ(round_half_up(0.35), 0.4);
  EXPECT_DOUBLE_EQ(round_half_up(69.7875), 69.8);
  EXPECT_DOUBLE_EQ(round_half_up(1.2345, 2), 1.23);
}

TEST(Aggregate, ReproducesPublishedRows) {
  struct Row {
    std::vector<double> per_task;
    double memorizing, understanding, exploring, overall;
  };
  const std::vector<Row> rows = {
      {{91.4, 93.5, 87.5, 69.2, 79.0, 61.4, 98.3, 95.2}, 90.8, 74.1, 85.0, 84.4},
      {{53.2, 83.9, 65.6, 60.0, 62.0, 51.9, 91.4, 90.3}, 67.6, 61.0, 77.9, 69.8},
  };
  for (const auto& row : rows) {
    const auto scores = scores_for(row.per_task);
    const auto r = aggregate(scores);
    EXPECT_NEAR(r.per_cognition.at("Memorizing"), row.memorizing, 0.05);
    EXPECT_NEAR(r.per_cognition.at("Understanding"), row.understanding, 0.05);
    EXPECT_NEAR(r.per_cognition.at("Exploring"), row.exploring, 0.05);
    ASSERT_TRUE(r.overall);
    EXPECT_NEAR(*r.overall, row.overall, 0.05);
    EXPECT_DOUBLE_EQ(to_json(r)["overall"].get<double>(), row.overall);
    EXPECT_TRUE(r.missing_families.empty());
  }
  const std::vector<std::pair<std::vector<double>, double>> overall_only = {
      {{79.7, 93.5, 62.5, 62.8, 54.3, 64.7, 100, 96.8}, 76.8},
      {{79.8, 94.6, 84.4, 62.6, 73.5, 51.9, 96.6, 98.4}, 80.2},
      {{63.5, 88.0, 31.3, 48.0, 48.0, 32.4, 25.9, 33.9}, 46.4},
  };
  for (const auto& [per_task, overall] : overall_only) {
    const auto scores = scores_for(per_task);
    EXPECT_DOUBLE_EQ(round_half_up(*aggregate(scores).overall), overall);
  }
}

TEST(Aggregate, FamilyMeansAreUnweighted) {
  std::vector<Score> s = {{"1", "popup_close", "accuracy", 100},
                          {"2", "popup_close", "accuracy", 0},
                          {"3", "popup_close", "accuracy", 0},
                          {"4", "single_step_web_task", "accuracy", 100},
                          {"5", "caption_qa", "rouge_l", 50}};
  const auto r = aggregate(s);
  EXPECT_NEAR(r.per_task.at("popup_close"), 100.0 / 3, 1e-12);
  EXPECT_NEAR(r.per_cognition.at("Exploring"), (100.0 / 3 + 100) / 2, 1e-12);
  EXPECT_EQ(r.per_cognition.count("Memorizing"), 0u);
  EXPECT_EQ(r.missing_families.size(), 6u);
  EXPECT_NEAR(*r.overall, (100.0 / 3 + 100) / 2, 1e-12);
  EXPECT_EQ(r.counts.at("popup_close"), 3);
  const std::string csv = report_csv(r);
  EXPECT_NE(csv.find("task,popup_close,33.3,3"), std::string::npos);
  EXPECT_NE(csv.find("task,caption_qa,50.0,1"), std::string::npos);
  EXPECT_NE(csv.find("overall,overall,66.7,"), std::string::npos);
  EXPECT_THROW(aggregate(std::span<const Score>()), Error);
}

TEST(SuccessRate, Fraction) {
  const std::vector<int> r = {1, 0, 1, 1};
  EXPECT_DOUBLE_EQ(success_rate(r), 75.0);
  EXPECT_THROW(success_rate(std::span<const int>()), Error);
}

TEST(Manifest, CountsAndIssues) {
  const auto good = instance("popup_close", "accuracy", {"strategy_set", json::array({{"close"}})});
  auto dup = good;
  auto wrong = instance("element_understanding", "rouge_l", {"text", "x"});
  wrong.task_id = "eu-1";
  std::string jsonl = tasks::to_json(good).dump() + "\n\n" + tasks::to_json(dup).dump() + "\nnot json\n" +
                      tasks::to_json(wrong).dump() + "\n";
  const auto r = validate_manifest(jsonl);
  EXPECT_EQ(r.total, 3);
  EXPECT_EQ(r.counts.at("popup_close"), 2);
  ASSERT_EQ(r.schema_errors.size(), 1u);
  EXPECT_EQ(r.schema_errors[0].line, 4u);
  ASSERT_EQ(r.mismatches.size(), 2u);
  EXPECT_EQ(r.mismatches[0].message, "duplicate task_id");
  EXPECT_EQ(r.mismatches[1].task_id, "eu-1");
  EXPECT_FALSE(r.ok());
  EXPECT_EQ(to_json(r)["total"], 3);
}

TEST(Manifest, BenchFixtureTotals) {
  const auto r = validate_manifest(read_text_file(cogweb::testing::fixture("bench_counts.jsonl")), true);
  EXPECT_TRUE(r.ok());
  EXPECT_EQ(r.total, 876);
  for (const auto* f : tasks::bench_families()) EXPECT_EQ(r.counts.at(std::string(f->id)), f->bench->count);
}
