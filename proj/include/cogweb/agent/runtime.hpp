#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cogweb/agent/action.hpp"
#include "cogweb/agent/thought.hpp"
#include "cogweb/browser/session.hpp"
#include "cogweb/model/client.hpp"
#include "cogweb/observation/ax_tree.hpp"

namespace cogweb::agent {

struct Step {
  obs::Observation observation;
  Thought thought;
  Action action;
  std::string raw_output;
  std::string note;  // error or correction note shown with this observation
};

enum class Termination { Stopped, MaxSteps, Error };
std::string_view termination_name(Termination t);

struct Trajectory {
  std::string task_id;
  std::string query;
  std::string initial_url;
  std::vector<Step> steps;
  std::optional<obs::Observation> final_observation;
  Termination termination = Termination::Error;
  std::string error;
  std::optional<std::string> answer;
  // (step number, raw output) for replies that failed to parse
  std::vector<std::pair<int, std::string>> rejected_outputs;
  int reward = 0;
};

extern const char* const kSystemPromptVersion;
const std::string& system_prompt();

struct Prompt {
  std::string system;
  std::string query;
  std::string history;
  std::string current;
  std::vector<Image> images;
  std::vector<int> image_steps;  // step number of each attached image

  model::ChatRequest to_request() const;
};

// All prior thoughts and actions are rendered as text; screenshots are
// attached for the last `window` observations including the current one.
Prompt build_prompt(const std::string& query, const obs::Observation& current, const std::vector<Step>& history,
                    int window = 3, std::string_view note = {});

struct ApplyResult {
  std::optional<obs::Observation> next;
  std::optional<std::string> terminal;
  std::string note;
};

// Executes one action. Unresolvable ids produce a note and a fresh
// observation of the unchanged page rather than an error.
ApplyResult apply_action(browser::BrowserSession& session, const Action& action, const obs::AXTree& tree,
                         int next_step, const std::string& initial_url,
                         std::chrono::milliseconds settle = browser::kDefaultSettleTimeout);

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string act(const Prompt& prompt) = 0;
};

class ModelPolicy final : public Policy {
 public:
  explicit ModelPolicy(model::ModelClient& client) : client_(client) {}
  std::string act(const Prompt& prompt) override { return client_.complete(prompt.to_request()); }

 private:
  model::ModelClient& client_;
};

struct EpisodeOptions {
  int max_steps = 15;
  int window = 3;
  int max_unparseable = 3;
  std::chrono::milliseconds settle = browser::kDefaultSettleTimeout;
};

struct AgentTask {
  std::string task_id;
  std::string query;
  std::string start_url;
  json checker;  // null for judge-scored tasks
};

std::vector<AgentTask> load_agent_tasks(std::string_view jsonl);

Trajectory run_episode(const AgentTask& task, Policy& policy, browser::BrowserSession& session,
                       const EpisodeOptions& options = {});

// Checker keys (all present ones must hold, and the episode must have
// stopped): "url_contains", "answer_contains", "ax_contains": {role, name}.
bool check_predicates(const Trajectory& traj, const json& checker);

// Judge verdict over the final screenshot and answer: "success" or "failure".
int judge_verdict(const Trajectory& traj, model::ModelClient& judge, int max_attempts = 3);

// Checker when the task has one, otherwise the judge. Throws
// JudgeUnreachable if judging is needed and no judge is given.
int evaluate_reward(const Trajectory& traj, const json& checker, model::ModelClient* judge = nullptr);

json trajectory_json(const Trajectory& traj);
void save_trajectory(const Trajectory& traj, const std::filesystem::path& dir);
Trajectory load_trajectory(const std::filesystem::path& dir);

}  // namespace cogweb::agent
