#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cogweb/agent/action.hpp"
#include "cogweb/cli/cli.hpp"
#include "cogweb/error.hpp"
#include "cogweb/evaluator/evaluator.hpp"
#include "cogweb/observation/ax_tree.hpp"
#include "cogweb/popup/popup.hpp"

namespace py = pybind11;
using namespace cogweb;

namespace {

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

py::dict action_to_dict(const agent::Action& a) {
  py::dict d;
  d["verb"] = std::string(agent::action_verb(a));
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, agent::Click> || std::is_same_v<T, agent::DbClick>) {
          d["id"] = v.id;
        } else if constexpr (std::is_same_v<T, agent::Type>) {
          d["id"] = v.id;
          d["content"] = v.content;
        } else if constexpr (std::is_same_v<T, agent::Scroll>) {
          d["id"] = v.id ? py::object(py::int_(*v.id)) : py::object(py::none());
          d["direction"] = v.direction == browser::ScrollDirection::Up ? "up" : "down";
        } else if constexpr (std::is_same_v<T, agent::Stop>) {
          d["content"] = v.content;
        }
      },
      a);
  return d;
}

agent::Action action_from_dict(const py::dict& d) {
  const auto verb = d["verb"].cast<std::string>();
  auto id = [&] { return d["id"].cast<int>(); };
  auto content = [&] { return d["content"].cast<std::string>(); };
  if (verb == "click") return agent::Click{id()};
  if (verb == "dbclick") return agent::DbClick{id()};
  if (verb == "type") return agent::Type{id(), content()};
  if (verb == "scroll") {
    agent::Scroll s;
    if (d.contains("id") && !d["id"].is_none()) s.id = id();
    const auto dir = d.contains("direction") ? d["direction"].cast<std::string>() : "down";
    if (dir != "up" && dir != "down") throw Error(Errc::InvalidArgument, "scroll direction must be up or down");
    s.direction = dir == "up" ? browser::ScrollDirection::Up : browser::ScrollDirection::Down;
    return s;
  }
  if (verb == "go_back") return agent::GoBack{};
  if (verb == "go_forward") return agent::GoForward{};
  if (verb == "stop") return agent::Stop{content()};
  if (verb == "restart") return agent::Restart{};
  if (verb == "wait") return agent::Wait{};
  throw Error(Errc::InvalidArgument, "unknown verb: " + verb);
}

py::list ax_to_list(const obs::AXTree& t) {
  py::list out;
  for (const auto& n : t.nodes) {
    py::dict d;
    d["id"] = n.id;
    d["role"] = n.role;
    d["name"] = n.name;
    d["description"] = n.description;
    d["states"] = n.states;
    d["depth"] = n.depth;
    out.append(d);
  }
  return out;
}

obs::AXTree ax_from_list(const py::list& nodes) {
  obs::AXTree t;
  for (const auto& item : nodes) {
    const auto d = item.cast<py::dict>();
    obs::AXNode n;
    n.id = static_cast<int>(t.nodes.size());
    n.role = d["role"].cast<std::string>();
    n.name = d.contains("name") ? d["name"].cast<std::string>() : "";
    n.description = d.contains("description") ? d["description"].cast<std::string>() : "";
    if (d.contains("states")) n.states = d["states"].cast<std::vector<std::string>>();
    n.depth = d.contains("depth") ? d["depth"].cast<int>() : 0;
    t.nodes.push_back(std::move(n));
  }
  return t;
}

eval::Score score_from(const py::handle& item) {
  if (py::isinstance<py::dict>(item)) {
    const auto d = item.cast<py::dict>();
    eval::Score s;
    s.task_id = d.contains("task_id") ? d["task_id"].cast<std::string>() : "";
    s.family = d["family"].cast<std::string>();
    s.metric = d.contains("metric") ? d["metric"].cast<std::string>() : "";
    s.value = d["value"].cast<double>();
    return s;
  }
  const auto [family, value] = item.cast<std::pair<std::string, double>>();
  return {"", family, "", value};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Task grammar, scoring and aggregation for the cogweb harness.";
  py::register_exception<Error>(m, "CogwebError", PyExc_ValueError);

  m.def("parse_action_line", [](std::string_view line) { return action_to_dict(agent::parse_action_line(line)); },
        py::arg("line"));
  m.def("parse_action", [](std::string_view text) { return action_to_dict(agent::parse_action(text)); },
        py::arg("text"), "Action from a full model reply.");
  m.def("format_action", [](const py::dict& d) { return agent::format_action(action_from_dict(d)); },
        py::arg("action"));

  m.def("rouge_l_f1", &eval::rouge_l_f1, py::arg("pred"), py::arg("ref"));
  m.def(
      "rouge_l",
      [](std::string_view pred, std::string_view ref) {
        const auto r = eval::rouge_l(pred, ref);
        py::dict d;
        d["lcs"] = r.lcs;
        d["precision"] = r.precision;
        d["recall"] = r.recall;
        d["f1"] = r.f1;
        return d;
      },
      py::arg("pred"), py::arg("ref"));
  m.def(
      "rouge_l_f1_tokens",
      [](const std::vector<std::uint8_t>& pred, const std::vector<std::uint8_t>& ref) {
        return eval::rouge_l_f1_tokens(pred, ref);
      },
      py::arg("pred"), py::arg("ref"));
  m.def("exact_match", &eval::exact_match, py::arg("pred"), py::arg("gold"));
  m.def("parse_label_set", &eval::parse_label_set, py::arg("prediction"));
  m.def("round_half_up", &eval::round_half_up, py::arg("value"), py::arg("decimals") = 1);
  m.def(
      "aggregate",
      [](const py::iterable& scores, bool rounded) {
        std::vector<eval::Score> v;
        for (const auto& item : scores) v.push_back(score_from(item));
        return to_py(eval::to_json(eval::aggregate(v), rounded));
      },
      py::arg("scores"), py::arg("rounded") = true,
      "Scores are (family, value) pairs or dicts with family and value.");
  m.def(
      "success_rate", [](const std::vector<int>& rewards) { return eval::success_rate(rewards); },
      py::arg("rewards"));
  m.def(
      "validate_manifest",
      [](std::string_view jsonl, bool bench) { return to_py(eval::to_json(eval::validate_manifest(jsonl, bench))); },
      py::arg("jsonl"), py::arg("bench") = false);

  m.def("enumerate_close_subsets", &popup::enumerate_close_subsets, py::arg("n"));

  m.def("parse_ax_text", [](std::string_view text) { return ax_to_list(obs::parse_ax_text(text)); },
        py::arg("text"));
  m.def("serialize_ax", [](const py::list& nodes) { return obs::serialize_ax(ax_from_list(nodes)); },
        py::arg("nodes"));

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "cogweb");
        std::vector<const char*> argv;
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = cli::dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs a cogweb subcommand; returns (exit_code, stdout, stderr).");
}
