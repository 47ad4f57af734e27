#include <gtest/gtest.h>

#include <functional>
#include <regex>

#include "cogweb/agent/runtime.hpp"
#include "cogweb/error.hpp"
#include "cogweb/sim/sim_browser.hpp"
#include "mock_model.hpp"

using namespace cogweb;
using namespace cogweb::agent;
using namespace std::chrono_literals;
using cogweb::testing::ScriptedClient;

namespace {

sim::SimBrowser make_browser() { return sim::SimBrowser(sim::SimSite::load(cogweb::testing::fixture("site.json"))); }

// Id of the first node with this role and name in the current observation.
int id_in(const Prompt& p, const std::string& role, const std::string& name) {
  const std::regex re("\\[(\\d+)\\] " + role + " '" + name + "'");
  std::smatch m;
  if (!std::regex_search(p.current, m, re)) throw std::runtime_error(role + " '" + name + "' not in prompt");
  return std::stoi(m[1].str());
}

class FnPolicy final : public Policy {
 public:
  explicit FnPolicy(std::function<std::string(const Prompt&, int)> fn) : fn_(std::move(fn)) {}
  std::string act(const Prompt& p) override {
    prompts.push_back(p);
    return fn_(p, calls_++);
  }
  std::vector<Prompt> prompts;

 private:
  std::function<std::string(const Prompt&, int)> fn_;
  int calls_ = 0;
};

std::string reply(const std::string& action) {
  return "## Webpage Layout Description\nA shop.\n## Task Recap\nDo it.\n## Final Action Summary\n" + action;
}

AgentTask about_task() {
  return {"find-about", "Report what the shop sells.", "https://shop.example/",
          {{"url_contains", "/about"}, {"answer_contains", "things"}}};
}

obs::Observation fake_obs(int step, std::uint8_t shade) {
  obs::Observation o;
  o.step = step;
  o.url = "https://x.example/" + std::to_string(step);
  o.ax_text = "[0] RootWebArea 'x'\n";
  o.ax = obs::parse_ax_text(o.ax_text);
  o.screenshot = Image(4, 4, {shade, shade, shade, 255});
  return o;
}

}  // namespace

TEST(Prompt, WindowLimitsScreenshots) {
  std::vector<Step> history;
  for (int i = 1; i <= 5; ++i) history.push_back({fake_obs(i, static_cast<std::uint8_t>(i)), {}, Click{i}, "", ""});
  const auto p = build_prompt("q", fake_obs(6, 6), history, 3, "fix it");
  EXPECT_EQ(p.image_steps, (std::vector<int>{4, 5, 6}));
  ASSERT_EQ(p.images.size(), 3u);
  EXPECT_EQ(p.images.back().at(0, 0).r, 6);
  for (int i = 1; i <= 5; ++i) {
    EXPECT_NE(p.history.find("Action: click [" + std::to_string(i) + "]"), std::string::npos);
  }
  EXPECT_NE(p.current.find("Note: fix it"), std::string::npos);
  const auto req = p.to_request();
  ASSERT_EQ(req.messages.size(), 2u);
  EXPECT_EQ(req.messages[0].role, "system");
  EXPECT_EQ(req.messages[1].images.size(), 3u);
  EXPECT_EQ(build_prompt("q", fake_obs(1, 1), {}, 3).image_steps, std::vector<int>{1});
  EXPECT_EQ(build_prompt("q", fake_obs(6, 6), history, 1).image_steps, std::vector<int>{6});
}

TEST(Apply, UnknownIdLeavesANote) {
  auto b = make_browser();
  b.navigate("https://shop.example/", 1s);
  const auto o = obs::compose_observation(b, 1, false);
  const auto r = apply_action(b, Click{999}, o.ax, 2, "https://shop.example/", 10ms);
  ASSERT_TRUE(r.next);
  EXPECT_NE(r.note.find("TargetUnresolvable"), std::string::npos);
  EXPECT_EQ(r.next->url, "https://shop.example/");
  EXPECT_EQ(r.next->step, 2);
  const auto back = apply_action(b, GoBack{}, o.ax, 2, "https://shop.example/", 10ms);
  EXPECT_EQ(back.note, "There is no previous page.");
  const auto stop = apply_action(b, Stop{"done"}, o.ax, 2, "https://shop.example/", 10ms);
  EXPECT_EQ(stop.terminal, "done");
  EXPECT_FALSE(stop.next);
}

TEST(Episode, NavigatesAndStops) {
  auto b = make_browser();
  FnPolicy policy([](const Prompt& p, int call) {
    if (call == 0) return reply("click [" + std::to_string(id_in(p, "link", "About us")) + "]");
    if (call == 1) return reply("scroll [WINDOW] [down]");
    return reply("stop [They sell things.]");
  });
  auto traj = run_episode(about_task(), policy, b, {.settle = 10ms});
  EXPECT_EQ(traj.termination, Termination::Stopped);
  EXPECT_EQ(traj.steps.size(), 3u);
  EXPECT_EQ(traj.answer, "They sell things.");
  ASSERT_TRUE(traj.final_observation);
  EXPECT_EQ(traj.final_observation->url, "https://shop.example/about");
  EXPECT_EQ(evaluate_reward(traj, about_task().checker), 1);
  EXPECT_EQ(traj.steps[0].thought.section("Task Recap"), "Do it.");
  EXPECT_EQ(policy.prompts[2].image_steps, (std::vector<int>{1, 2, 3}));
}

TEST(Episode, InteractsWithStatefulWidgets) {
  auto b = make_browser();
  const AgentTask task{"add-chair", "Add the chair", "https://shop.example/products",
                       {{"ax_contains", {{"role", "status"}, {"name", "Cart (1)"}}}}};
  FnPolicy policy([](const Prompt& p, int call) {
    if (call == 0) return "click [" + std::to_string(id_in(p, "button", "Add chair to cart")) + "]";
    return std::string("stop [added]");
  });
  auto traj = run_episode(task, policy, b, {.settle = 10ms});
  EXPECT_EQ(traj.termination, Termination::Stopped);
  EXPECT_EQ(traj.steps[0].thought.final_action_summary(), format_action(traj.steps[0].action));
  EXPECT_EQ(evaluate_reward(traj, task.checker), 1);
}

TEST(Episode, HitsStepCap) {
  auto b = make_browser();
  FnPolicy policy([](const Prompt&, int) { return reply("scroll [WINDOW] [down]"); });
  auto traj = run_episode(about_task(), policy, b, {.max_steps = 15, .settle = 10ms});
  EXPECT_EQ(traj.termination, Termination::MaxSteps);
  EXPECT_EQ(traj.steps.size(), 15u);
  EXPECT_FALSE(traj.answer);
  EXPECT_EQ(evaluate_reward(traj, about_task().checker), 0);
}

TEST(Episode, RepromptsThenGivesUpOnGarbage) {
  auto b = make_browser();
  FnPolicy policy([](const Prompt&, int call) { return call == 0 ? std::string("hmm") : reply("stop [x]"); });
  auto ok = run_episode(about_task(), policy, b, {.settle = 10ms});
  EXPECT_EQ(ok.termination, Termination::Stopped);
  EXPECT_EQ(ok.steps.size(), 1u);
  ASSERT_EQ(ok.rejected_outputs.size(), 1u);
  EXPECT_EQ(ok.rejected_outputs[0].first, 1);
  EXPECT_NE(policy.prompts[1].current.find("no valid action"), std::string::npos);

  FnPolicy garbage([](const Prompt&, int) { return std::string("I am not sure."); });
  auto bad = run_episode(about_task(), garbage, b, {.settle = 10ms});
  EXPECT_EQ(bad.termination, Termination::Error);
  EXPECT_EQ(bad.rejected_outputs.size(), 3u);
  EXPECT_TRUE(bad.steps.empty());
  EXPECT_EQ(evaluate_reward(bad, about_task().checker), 0);
}

TEST(Episode, ModelPolicyAndEndpointFailure) {
  auto b = make_browser();
  ScriptedClient client({reply("go_back"), reply("stop [things]")});
  ModelPolicy policy(client);
  auto traj = run_episode(about_task(), policy, b, {.settle = 10ms});
  EXPECT_EQ(traj.termination, Termination::Stopped);
  EXPECT_EQ(traj.steps[1].note, "There is no previous page.");
  EXPECT_EQ(client.requests()[0].messages[0].text, system_prompt());
  // Stopped on the start page, so the URL predicate fails.
  EXPECT_EQ(evaluate_reward(traj, about_task().checker), 0);

  cogweb::testing::DownClient down;
  ModelPolicy dead(down);
  auto err = run_episode(about_task(), dead, b, {.settle = 10ms});
  EXPECT_EQ(err.termination, Termination::Error);
  EXPECT_NE(err.error.find("EndpointUnreachable"), std::string::npos);
  EXPECT_THROW(run_episode(about_task(), policy, b, {.max_steps = 0}), Error);
}

TEST(Reward, JudgeVerdicts) {
  Trajectory t;
  t.query = "q";
  t.termination = Termination::Stopped;
  t.final_observation = fake_obs(1, 0);
  ScriptedClient yes({"Success."});
  EXPECT_EQ(evaluate_reward(t, nullptr, &yes), 1);
  ASSERT_EQ(yes.requests()[0].messages[1].images.size(), 1u);
  ScriptedClient no({"FAILURE, not a success"});
  EXPECT_EQ(judge_verdict(t, no), 0);
  ScriptedClient vague({"maybe"}, true);
  try {
    judge_verdict(t, vague);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::JudgeParseError);
  }
  EXPECT_EQ(vague.calls(), 3);
  cogweb::testing::DownClient down;
  try {
    judge_verdict(t, down);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::JudgeUnreachable);
  }
  EXPECT_THROW(evaluate_reward(t, json::object(), nullptr), Error);
}

TEST(Tasks, LoadsFixtureAndRejectsBadLines) {
  const auto tasks = load_agent_tasks(read_text_file(cogweb::testing::fixture("agent_tasks.jsonl")));
  ASSERT_EQ(tasks.size(), 2u);
  EXPECT_EQ(tasks[0].task_id, "find-about");
  EXPECT_EQ(tasks[1].checker["ax_contains"]["name"], "Cart (1)");
  EXPECT_THROW(load_agent_tasks("{\"query\": \"x\"}\n"), Error);
  EXPECT_EQ(load_agent_tasks("{\"query\": \"x\", \"start_url\": \"u\"}\n")[0].task_id, "task-1");
}

TEST(TrajectoryIo, SaveLoadRoundTrip) {
  auto b = make_browser();
  FnPolicy policy([](const Prompt& p, int call) {
    if (call == 0) return std::string("nonsense");
    if (call == 1) return reply("type [" + std::to_string(id_in(p, "searchbox", "Search products")) + "] [lamp [red]]");
    return reply("stop [Answer: [none]]");
  });
  auto traj = run_episode(about_task(), policy, b, {.settle = 10ms});
  traj.reward = 1;
  ASSERT_EQ(traj.termination, Termination::Stopped);
  const auto dir = cogweb::testing::scratch_dir("traj");
  save_trajectory(traj, dir);
  EXPECT_TRUE(std::filesystem::exists(dir / "step_001.png"));
  EXPECT_TRUE(std::filesystem::exists(dir / "final.png"));
  const auto back = load_trajectory(dir);
  EXPECT_EQ(trajectory_json(back), trajectory_json(traj));
  ASSERT_EQ(back.steps.size(), traj.steps.size());
  for (std::size_t i = 0; i < back.steps.size(); ++i) {
    EXPECT_EQ(back.steps[i].action, traj.steps[i].action);
    EXPECT_EQ(back.steps[i].observation.screenshot, traj.steps[i].observation.screenshot);
    EXPECT_EQ(obs::serialize_ax(back.steps[i].observation.ax), traj.steps[i].observation.ax_text);
  }
  EXPECT_EQ(back.answer, "Answer: [none]");
  EXPECT_EQ(back.rejected_outputs, traj.rejected_outputs);
}
