#include "cogweb/agent/runtime.hpp"

#include <algorithm>
#include <cstdio>

#include "cogweb/error.hpp"

namespace cogweb::agent {

namespace fs = std::filesystem;
using browser::BackendId;
using browser::InputPrimitive;

std::string_view termination_name(Termination t) {
  switch (t) {
    case Termination::Stopped: return "stopped";
    case Termination::MaxSteps: return "max_steps";
    case Termination::Error: return "error";
  }
  return "error";
}

const char* const kSystemPromptVersion = "agent-system/2";

const std::string& system_prompt() {
  static const std::string text =
      "You operate a web browser to complete the user's task. Each turn you receive the page's "
      "accessibility tree, where every element has a numeric id in brackets, together with recent "
      "screenshots.\n\n"
      "Available actions:\n"
      "click [id]                  click the element\n"
      "type [id] [content]         type content into the element\n"
      "scroll [id or WINDOW] [up or down]\n"
      "dbclick [id]                double-click the element\n"
      "go_back                     return to the previous page\n"
      "go_forward                  move forward in history\n"
      "stop [content]              finish; content is your answer\n"
      "restart                     reload the task's start page\n"
      "wait                        pause briefly\n\n"
      "Reason under these headings, in this order:\n"
      "## Webpage Layout Description\n"
      "## Key Element Analysis\n"
      "## Task Recap\n"
      "## Task Decomposition\n"
      "## Step-by-Step Reasoning\n"
      "## Final Action Summary\n"
      "End the Final Action Summary with exactly one action on its own line.";
  return text;
}

model::ChatRequest Prompt::to_request() const {
  model::ChatRequest req;
  req.messages.push_back({"system", system, {}});
  std::string user = "Task: " + query + "\n\n";
  if (!history.empty()) user += "Previous steps:\n" + history + "\n";
  user += current;
  req.messages.push_back({"user", user, images});
  return req;
}

namespace {

std::string render_observation(const obs::Observation& o) {
  return "URL: " + o.url + "\nAccessibility tree:\n" + o.ax_text;
}

}  // namespace

Prompt build_prompt(const std::string& query, const obs::Observation& current, const std::vector<Step>& history,
                    int window, std::string_view note) {
  Prompt p;
  p.system = system_prompt();
  p.query = query;
  const int step = static_cast<int>(history.size()) + 1;
  const int first_image_step = std::max(1, step - std::max(window, 1) + 1);
  for (std::size_t i = 0; i < history.size(); ++i) {
    const auto& s = history[i];
    const int n = static_cast<int>(i) + 1;
    p.history += "### Step " + std::to_string(n) + "\n";
    if (!s.note.empty()) p.history += "Note: " + s.note + "\n";
    p.history += render_observation(s.observation);
    p.history += "Thought:\n" + render_thought(s.thought);
    p.history += "Action: " + format_action(s.action) + "\n\n";
    if (n >= first_image_step && window > 0) {
      p.images.push_back(s.observation.screenshot);
      p.image_steps.push_back(n);
    }
  }
  p.current = "### Step " + std::to_string(step) + " (current)\n";
  if (!note.empty()) p.current += "Note: " + std::string(note) + "\n";
  p.current += render_observation(current);
  if (window > 0) {
    p.images.push_back(current.screenshot);
    p.image_steps.push_back(step);
  }
  return p;
}

ApplyResult apply_action(browser::BrowserSession& session, const Action& action, const obs::AXTree& tree,
                         int next_step, const std::string& initial_url, std::chrono::milliseconds settle) {
  ApplyResult out;
  if (const auto* stop = std::get_if<Stop>(&action)) {
    out.terminal = stop->content;
    return out;
  }
  auto backend = [&](int id) -> BackendId {
    const auto b = tree.backend_of(id);
    if (!b || *b <= 0) throw Error(Errc::TargetUnresolvable, "element [" + std::to_string(id) + "] is not on the page");
    return BackendId{*b};
  };
  try {
    browser::InputOutcome outcome = browser::InputOutcome::Dispatched;
    bool wait_for_load = true;
    if (const auto* a = std::get_if<Click>(&action)) {
      outcome = session.execute_input(InputPrimitive::click(backend(a->id)));
    } else if (const auto* a = std::get_if<DbClick>(&action)) {
      outcome = session.execute_input(InputPrimitive::dbclick(backend(a->id)));
    } else if (const auto* a = std::get_if<Type>(&action)) {
      outcome = session.execute_input(InputPrimitive::type_text(backend(a->id), a->content));
    } else if (const auto* a = std::get_if<Scroll>(&action)) {
      const browser::InputTarget target =
          a->id ? browser::InputTarget(backend(*a->id)) : browser::InputTarget(browser::WindowTarget{});
      outcome = session.execute_input(InputPrimitive::scroll(target, a->direction));
      wait_for_load = false;
    } else if (std::holds_alternative<GoBack>(action)) {
      outcome = session.execute_input(InputPrimitive::history_back());
      if (outcome == browser::InputOutcome::NoOp) out.note = "There is no previous page.";
    } else if (std::holds_alternative<GoForward>(action)) {
      outcome = session.execute_input(InputPrimitive::history_forward());
      if (outcome == browser::InputOutcome::NoOp) out.note = "There is no next page.";
    } else if (std::holds_alternative<Restart>(action)) {
      const auto nav = session.navigate(initial_url, settle);
      session.reset_history();
      if (nav.status == browser::NavigationStatus::Timeout) out.note = "The start page did not finish loading.";
      wait_for_load = false;
    } else if (std::holds_alternative<Wait>(action)) {
      outcome = session.execute_input(InputPrimitive::wait());
      wait_for_load = false;
    }
    if (wait_for_load && outcome == browser::InputOutcome::Dispatched) session.settle(settle);
  } catch (const Error& e) {
    if (e.code() != Errc::TargetUnresolvable && e.code() != Errc::StaleTarget) throw;
    out.note = std::string("Action failed: ") + e.what();
  }
  out.next = obs::compose_observation(session, next_step, false);
  return out;
}

std::vector<AgentTask> load_agent_tasks(std::string_view jsonl) {
  std::vector<AgentTask> out;
  std::size_t lineno = 0;
  for (const auto& raw : split_lines(jsonl)) {
    ++lineno;
    if (trim(raw).empty()) continue;
    try {
      const json j = json::parse(raw);
      AgentTask t;
      t.task_id = j.value("task_id", "task-" + std::to_string(lineno));
      t.query = j.at("query").get<std::string>();
      t.start_url = j.at("start_url").get<std::string>();
      t.checker = j.value("checker", json());
      out.push_back(std::move(t));
    } catch (const json::exception& e) {
      throw Error(Errc::SchemaError, "task line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

Trajectory run_episode(const AgentTask& task, Policy& policy, browser::BrowserSession& session,
                       const EpisodeOptions& options) {
  if (options.max_steps < 1) throw Error(Errc::InvalidArgument, "max_steps must be at least 1");
  Trajectory traj;
  traj.task_id = task.task_id;
  traj.query = task.query;
  traj.initial_url = task.start_url;
  try {
    const auto nav = session.navigate(task.start_url, options.settle);
    session.reset_history();
    if (nav.status == browser::NavigationStatus::Timeout) {
      log_event("warn", "start page did not settle", {{"url", task.start_url}});
    }
    obs::Observation current = obs::compose_observation(session, 1, false);
    std::string note;
    int bad = 0;
    traj.termination = Termination::MaxSteps;
    while (static_cast<int>(traj.steps.size()) < options.max_steps) {
      const int step = static_cast<int>(traj.steps.size()) + 1;
      const Prompt prompt = build_prompt(task.query, current, traj.steps, options.window, note);
      const std::string raw = policy.act(prompt);
      Action action;
      try {
        action = parse_action(raw);
      } catch (const Error& e) {
        if (e.code() != Errc::Unparseable) throw;
        traj.rejected_outputs.emplace_back(step, raw);
        if (++bad >= options.max_unparseable) {
          traj.termination = Termination::Error;
          traj.error = std::to_string(bad) + " consecutive unparseable outputs";
          break;
        }
        note = std::string("Your last reply had no valid action (") + e.what() +
               "). End the Final Action Summary with one action line.";
        continue;
      }
      bad = 0;
      Step s{current, parse_thought(raw), action, raw, note};
      if (!s.thought.has_final_section || s.thought.sections[5].empty()) {
        s.thought.sections[5] = format_action(action);
      }
      note.clear();
      ApplyResult res = apply_action(session, action, current.ax, step + 1, task.start_url, options.settle);
      traj.steps.push_back(std::move(s));
      if (res.terminal) {
        traj.termination = Termination::Stopped;
        traj.answer = *res.terminal;
        traj.final_observation = current;
        break;
      }
      current = std::move(*res.next);
      note = res.note;
      traj.final_observation = current;
    }
  } catch (const Error& e) {
    traj.termination = Termination::Error;
    traj.error = e.what();
    log_event("error", "episode ended with an error", {{"task_id", task.task_id}, {"error", e.what()}});
  }
  return traj;
}

bool check_predicates(const Trajectory& traj, const json& checker) {
  if (traj.termination != Termination::Stopped || !traj.final_observation) return false;
  const auto& fin = *traj.final_observation;
  if (checker.contains("url_contains") && fin.url.find(checker["url_contains"].get<std::string>()) == std::string::npos) {
    return false;
  }
  if (checker.contains("answer_contains")) {
    const std::string want = to_lower(checker["answer_contains"].get<std::string>());
    if (!traj.answer || to_lower(*traj.answer).find(want) == std::string::npos) return false;
  }
  if (checker.contains("ax_contains")) {
    const auto& want = checker["ax_contains"];
    const std::string role = want.value("role", "");
    const std::string name = want.value("name", "");
    const bool found = std::any_of(fin.ax.nodes.begin(), fin.ax.nodes.end(), [&](const obs::AXNode& n) {
      return (role.empty() || n.role == role) && n.name == name;
    });
    if (!found) return false;
  }
  return true;
}

int judge_verdict(const Trajectory& traj, model::ModelClient& judge, int max_attempts) {
  model::ChatRequest req;
  req.messages.push_back({"system",
                          "You check whether a web agent completed its task. Look at the final page and the "
                          "agent's answer. Reply with one word: success or failure.",
                          {}});
  std::vector<Image> images;
  if (traj.final_observation) images.push_back(traj.final_observation->screenshot);
  req.messages.push_back({"user",
                          "Task: " + traj.query + "\nAgent answer: " + traj.answer.value_or("(none)") +
                              "\nEpisode ended by: " + std::string(termination_name(traj.termination)),
                          images});
  std::string last;
  for (int i = 0; i < std::max(max_attempts, 1); ++i) {
    try {
      last = to_lower(judge.complete(req));
    } catch (const Error& e) {
      if (e.code() == Errc::EndpointUnreachable || e.code() == Errc::RateLimited) {
        throw Error(Errc::JudgeUnreachable, e.what());
      }
      throw;
    }
    const auto s = last.find("success");
    const auto f = last.find("failure");
    if (s != std::string::npos && (f == std::string::npos || s < f)) return 1;
    if (f != std::string::npos) return 0;
  }
  throw Error(Errc::JudgeParseError, "judge gave no verdict: " + last.substr(0, 120));
}

int evaluate_reward(const Trajectory& traj, const json& checker, model::ModelClient* judge) {
  if (checker.is_object() && !checker.empty()) return check_predicates(traj, checker) ? 1 : 0;
  if (!judge) throw Error(Errc::JudgeUnreachable, "task " + traj.task_id + " needs a judge endpoint");
  return judge_verdict(traj, *judge);
}

namespace {

std::string step_png(int n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "step_%03d.png", n);
  return buf;
}

json observation_json(const obs::Observation& o, const std::string& png) {
  return {{"step", o.step}, {"url", o.url}, {"ax_text", o.ax_text}, {"screenshot", png}};
}

obs::Observation observation_from(const json& j, const fs::path& dir) {
  obs::Observation o;
  o.step = j.value("step", 1);
  o.url = j.value("url", "");
  o.ax_text = j.value("ax_text", "");
  o.ax = obs::parse_ax_text(o.ax_text);
  const std::string png = j.value("screenshot", "");
  if (!png.empty() && fs::exists(dir / png)) o.screenshot = read_png(dir / png);
  return o;
}

}  // namespace

json trajectory_json(const Trajectory& traj) {
  json steps = json::array();
  for (std::size_t i = 0; i < traj.steps.size(); ++i) {
    const auto& s = traj.steps[i];
    json sections = json::object();
    for (std::size_t h = 0; h < kThoughtSections.size(); ++h) sections[std::string(kThoughtSections[h])] = s.thought.sections[h];
    json sj = observation_json(s.observation, step_png(static_cast<int>(i) + 1));
    sj["step"] = i + 1;
    sj["thought"] = sections;
    sj["action"] = format_action(s.action);
    sj["raw_output"] = s.raw_output;
    sj["note"] = s.note;
    steps.push_back(std::move(sj));
  }
  json rejected = json::array();
  for (const auto& [step, raw] : traj.rejected_outputs) rejected.push_back({{"step", step}, {"raw_output", raw}});
  return {{"task_id", traj.task_id},
          {"query", traj.query},
          {"initial_url", traj.initial_url},
          {"steps", steps},
          {"final", traj.final_observation ? observation_json(*traj.final_observation, "final.png") : json(nullptr)},
          {"termination", termination_name(traj.termination)},
          {"error", traj.error},
          {"answer", traj.answer ? json(*traj.answer) : json(nullptr)},
          {"rejected_outputs", rejected},
          {"reward", traj.reward}};
}

void save_trajectory(const Trajectory& traj, const fs::path& dir) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < traj.steps.size(); ++i) {
    write_png(traj.steps[i].observation.screenshot, dir / step_png(static_cast<int>(i) + 1));
  }
  if (traj.final_observation && !traj.final_observation->screenshot.empty()) {
    write_png(traj.final_observation->screenshot, dir / "final.png");
  }
  write_text_file(dir / "trajectory.json", trajectory_json(traj).dump(2) + "\n");
}

Trajectory load_trajectory(const fs::path& dir) {
  const json j = json::parse(read_text_file(dir / "trajectory.json"));
  Trajectory t;
  t.task_id = j.value("task_id", "");
  t.query = j.value("query", "");
  t.initial_url = j.value("initial_url", "");
  for (const auto& sj : j.at("steps")) {
    Step s;
    s.observation = observation_from(sj, dir);
    s.raw_output = sj.value("raw_output", "");
    s.thought = parse_thought(s.raw_output);
    if (sj.contains("thought")) {
      for (std::size_t h = 0; h < kThoughtSections.size(); ++h) {
        s.thought.sections[h] = sj["thought"].value(std::string(kThoughtSections[h]), "");
      }
    }
    s.action = parse_action_line(sj.at("action").get<std::string>());
    s.note = sj.value("note", "");
    t.steps.push_back(std::move(s));
  }
  if (j.contains("final") && !j["final"].is_null()) t.final_observation = observation_from(j["final"], dir);
  const std::string term = j.value("termination", "error");
  t.termination = term == "stopped" ? Termination::Stopped : term == "max_steps" ? Termination::MaxSteps : Termination::Error;
  t.error = j.value("error", "");
  if (j.contains("answer") && j["answer"].is_string()) t.answer = j["answer"].get<std::string>();
  for (const auto& r : j.value("rejected_outputs", json::array())) {
    t.rejected_outputs.emplace_back(r.value("step", 0), r.value("raw_output", ""));
  }
  t.reward = j.value("reward", 0);
  return t;
}

}  // namespace cogweb::agent
