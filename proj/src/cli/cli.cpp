#include "cogweb/cli/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "cogweb/agent/runtime.hpp"
#include "cogweb/browser/cdp.hpp"
#include "cogweb/crawler/crawler.hpp"
#include "cogweb/error.hpp"
#include "cogweb/evaluator/evaluator.hpp"
#include "cogweb/popup/popup.hpp"
#include "cogweb/sim/sim_browser.hpp"
#include "cogweb/taskgen/families.hpp"
#include "cogweb/taskgen/generate.hpp"

namespace cogweb::cli {

namespace fs = std::filesystem;

namespace {

std::string one_decimal(double v) {
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(1);
  o << eval::round_half_up(v);
  return o.str();
}

struct BrowserFlags {
  std::string cdp_endpoint;
  std::string sim_site;
  int width = 1280;
  int height = 720;
};

struct ModelFlags {
  std::string endpoint;
  std::string name;
};

void add_browser_flags(CLI::App* app, BrowserFlags& f) {
  app->add_option("--cdp-endpoint", f.cdp_endpoint, "DevTools endpoint (ws:// or http://host:port)")
      ->envname("COGWEB_CDP");
  app->add_option("--sim-site", f.sim_site, "Drive the built-in simulator with this site description");
  app->add_option("--width", f.width, "Viewport width")->capture_default_str();
  app->add_option("--height", f.height, "Viewport height")->capture_default_str();
}

void add_model_flags(CLI::App* app, ModelFlags& f, const std::string& what) {
  app->add_option("--model-endpoint", f.endpoint, what + " endpoint (chat-completions compatible)");
  app->add_option("--model-name", f.name, "Model name sent with each request");
}

std::unique_ptr<browser::BrowserSession> open_session(const BrowserFlags& f) {
  const browser::Viewport vp{f.width, f.height};
  if (!f.sim_site.empty()) return std::make_unique<sim::SimBrowser>(sim::SimSite::load(f.sim_site), vp);
  if (f.cdp_endpoint.empty()) throw Error(Errc::InvalidArgument, "set --cdp-endpoint, COGWEB_CDP or --sim-site");
  static browser::CdpDriver driver;
  return driver.connect(f.cdp_endpoint, vp);
}

std::unique_ptr<model::ModelClient> open_model(const ModelFlags& f) {
  if (f.endpoint.empty()) return nullptr;
  model::HttpClientOptions o;
  o.endpoint = f.endpoint;
  o.model_name = f.name;
  return std::make_unique<model::HttpChatClient>(o);
}

void write_provenance(const fs::path& dir, const std::string& command, const std::vector<std::string>& args,
                      const json& config) {
  const json p = {{"tool", "cogweb"},
                  {"version", kVersion},
                  {"command", command},
                  {"argv", args},
                  {"config", config},
                  {"prompt_pack", tasks::kPromptPackVersion},
                  {"system_prompt", agent::kSystemPromptVersion},
                  {"judge_rubric", model::kJudgeRubricVersion}};
  write_text_file(dir / "provenance.json", p.dump(2) + "\n");
}

std::vector<fs::path> site_dirs(const fs::path& store) {
  if (fs::exists(store / "pages.json")) return {store};
  std::vector<fs::path> out;
  if (fs::is_directory(store)) {
    for (const auto& e : fs::directory_iterator(store)) {
      if (e.is_directory() && fs::exists(e.path() / "pages.json")) out.push_back(e.path());
    }
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw Error(Errc::InvalidArgument, "no crawl store found under " + store.string());
  return out;
}

std::vector<json> read_jsonl(const fs::path& path, int* bad) {
  std::vector<json> out;
  for (const auto& line : split_lines(read_text_file(path))) {
    if (trim(line).empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::exception&) {
      out.push_back(json());
      if (bad) ++*bad;
    }
  }
  return out;
}

std::string predict_live(model::ModelClient& client, const tasks::TaskInstance& t, const fs::path& root) {
  model::ChatMessage msg{"user", t.prompt, {}};
  for (const auto& img : t.images) msg.images.push_back(read_png(root / img));
  for (const auto& c : t.choices) {
    if (!c.image.empty()) {
      msg.images.push_back(read_png(root / c.image));
      msg.text += "\nCandidate " + c.label + ": image " + std::to_string(msg.images.size());
    } else if (!c.text.empty()) {
      msg.text += "\nCandidate " + c.label + ": " + c.text;
    }
  }
  model::ChatRequest req;
  req.messages.push_back(std::move(msg));
  return trim(client.complete(req));
}

int run_crawl(const BrowserFlags& bf, const std::string& start_url, const crawl::CrawlOptions& opts,
              const std::string& store, const std::string& bundle_path, const std::vector<std::string>& args,
              std::ostream& out) {
  auto session = open_session(bf);
  const std::string bundle = crawl::load_instrumentation_bundle(bundle_path);
  crawl::Instrumentation instr(*session, bundle);
  crawl::CrawlStats stats;
  const auto result = crawl::crawl_site(*session, start_url, opts, &instr, &stats);
  result.save(store);
  write_provenance(fs::path(store) / result.site, "crawl", args,
                   {{"start_url", start_url},
                    {"max_layers", opts.max_layers},
                    {"max_elements_per_page", opts.budget.max_elements_per_page},
                    {"max_records", opts.budget.max_records},
                    {"live_markers", opts.live_markers}});
  out << "records " << result.records.size() << " pages " << result.pages.size() << " failures " << stats.failures
      << "\n";
  return stats.failures > 0 ? 1 : 0;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Web cognition dataset, agent and benchmark harness", "cogweb"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  std::vector<std::string> args(argv, argv + argc);

  BrowserFlags browser_flags;
  ModelFlags model_flags;

  auto* crawl_cmd = app.add_subcommand("crawl", "Crawl a site layer by layer and record interactions");
  std::string start_url, store_dir, bundle_path;
  crawl::CrawlOptions crawl_opts;
  crawl_cmd->add_option("--start-url", start_url, "First page")->required();
  crawl_cmd->add_option("--store", store_dir, "Crawl store root")->required();
  crawl_cmd->add_option("--max-layers", crawl_opts.max_layers, "Click depth (1-6)")->capture_default_str();
  crawl_cmd->add_option("--max-elements", crawl_opts.budget.max_elements_per_page, "Elements probed per page")
      ->capture_default_str();
  crawl_cmd->add_option("--max-records", crawl_opts.budget.max_records, "Total record budget")->capture_default_str();
  crawl_cmd->add_option("--instrumentation", bundle_path, "In-page script bundle")->envname("COGWEB_INSTRUMENTATION");
  crawl_cmd->add_flag("--live-markers", crawl_opts.live_markers, "Draw base_rect markers in the page");
  add_browser_flags(crawl_cmd, browser_flags);

  auto* gen_cmd = app.add_subcommand("gen-tasks", "Generate task instances from a crawl store");
  std::string out_dir, families_csv, external_root;
  std::vector<std::string> externals;
  std::uint64_t seed = 7;
  gen_cmd->add_option("--store", store_dir, "Crawl store root or site directory");
  gen_cmd->add_option("--out", out_dir, "Dataset directory")->required();
  gen_cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
  gen_cmd->add_option("--families", families_csv, "Comma-separated family ids");
  gen_cmd->add_option("--external", externals, "corpus=path.jsonl (multi_ui_caption_qa, multi_ui_single_step, "
                                               "mind2web_trajectories)");
  gen_cmd->add_option("--external-root", external_root, "Directory that external image paths are relative to");
  add_model_flags(gen_cmd, model_flags, "Annotator");

  auto* synth_cmd = app.add_subcommand("synth-popups", "Composite popups and emit popup-close tasks");
  std::string assets_dir, backgrounds, trajectories_dir;
  int per_background = 1, noisy_step = 0;
  synth_cmd->add_option("--assets", assets_dir, "Directory of popup asset bundles")->required();
  synth_cmd->add_option("--backgrounds", backgrounds, "Background PNG or directory of PNGs")->required();
  synth_cmd->add_option("--out", out_dir, "Output directory")->required();
  synth_cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
  synth_cmd->add_option("--per-background", per_background, "Instances per background and asset")
      ->capture_default_str();
  synth_cmd->add_option("--trajectories", trajectories_dir, "Trajectory directories to add popup noise to");
  synth_cmd->add_option("--step", noisy_step, "Step receiving the popup (default: random)");

  auto* run_cmd = app.add_subcommand("run-agent", "Run agent episodes");
  std::string tasks_path;
  ModelFlags judge_flags;
  agent::EpisodeOptions episode;
  run_cmd->add_option("--tasks", tasks_path, "Task JSONL with task_id, query, start_url, checker")->required();
  run_cmd->add_option("--out", out_dir, "Trajectory root")->required();
  run_cmd->add_option("--max-steps", episode.max_steps, "Step limit")->capture_default_str();
  run_cmd->add_option("--window", episode.window, "Screenshots kept in the prompt")->capture_default_str();
  run_cmd->add_option("--judge-endpoint", judge_flags.endpoint, "Judge endpoint for tasks without a checker");
  add_model_flags(run_cmd, model_flags, "Policy");
  add_browser_flags(run_cmd, browser_flags);

  auto* eval_cmd = app.add_subcommand("eval", "Score predictions on a benchmark manifest");
  std::string bench_path, predictions, report_path, csv_path;
  double per_point = 20.0;
  eval_cmd->add_option("--bench", bench_path, "Benchmark manifest")->required();
  eval_cmd->add_option("--predictions", predictions, "Predictions JSONL or a model endpoint URL")->required();
  eval_cmd->add_option("--report", report_path, "Report JSON path")->required();
  eval_cmd->add_option("--csv", csv_path, "Also write a CSV table");
  eval_cmd->add_option("--judge-endpoint", judge_flags.endpoint, "Judge endpoint for lvm_judge instances");
  eval_cmd->add_option("--judge-scale", per_point, "Percentage points per judge score")->capture_default_str();
  eval_cmd->add_option("--model-name", model_flags.name, "Model name for live predictions and judging");

  auto* validate_cmd = app.add_subcommand("validate", "Check a manifest against the family tables");
  std::string manifest_path;
  auto* bench_opt = validate_cmd->add_option("--bench", bench_path, "Benchmark manifest (bench metric bindings)");
  auto* manifest_opt = validate_cmd->add_option("--manifest", manifest_path, "Dataset manifest");
  bench_opt->excludes(manifest_opt);
  validate_cmd->require_option(1);

  auto* report_cmd = app.add_subcommand("report", "Summarize trajectories or a saved report");
  report_cmd->add_option("--trajectories", trajectories_dir, "Trajectory root");
  report_cmd->add_option("--report", report_path, "Report JSON written by eval");
  report_cmd->require_option(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    if (crawl_cmd->parsed()) {
      return run_crawl(browser_flags, start_url, crawl_opts, store_dir, bundle_path, args, out);
    }

    if (gen_cmd->parsed()) {
      if (store_dir.empty() && externals.empty()) throw Error(Errc::InvalidArgument, "give --store or --external");
      auto annotator = open_model(model_flags);
      tasks::GenerateOptions opts;
      opts.seed = seed;
      opts.annotator = annotator.get();
      std::stringstream families_in(families_csv);
      for (std::string f; std::getline(families_in, f, ',');) {
        if (!trim(f).empty()) opts.families.insert(trim(f));
      }
      for (const auto& f : opts.families) {
        if (!tasks::find_family(f)) throw Error(Errc::InvalidArgument, "unknown family '" + f + "'");
      }
      std::vector<tasks::TaskInstance> all;
      int skipped = 0;
      if (!store_dir.empty()) {
        for (const auto& dir : site_dirs(store_dir)) {
          tasks::GenerateStats st;
          auto got = tasks::generate_from_store(crawl::CrawlStore::load(dir), out_dir, opts, &st);
          all.insert(all.end(), got.begin(), got.end());
        }
      }
      tasks::ImageSink sink(out_dir);
      for (const auto& spec : externals) {
        const auto eq = spec.find('=');
        const auto corpus = eq == std::string::npos ? std::nullopt : tasks::parse_corpus(spec.substr(0, eq));
        if (!corpus) throw Error(Errc::InvalidArgument, "bad --external '" + spec + "'");
        const fs::path src = spec.substr(eq + 1);
        const fs::path root = external_root.empty() ? src.parent_path() : fs::path(external_root);
        tasks::ConversionStats cs;
        auto got = tasks::convert_external(*corpus, read_jsonl(src, nullptr), root, sink, &cs);
        skipped += cs.skipped;
        all.insert(all.end(), got.begin(), got.end());
      }
      write_text_file(fs::path(out_dir) / "manifest.jsonl", tasks::manifest_jsonl(all));
      write_provenance(out_dir, "gen-tasks", args,
                       {{"store", store_dir}, {"seed", seed}, {"families", opts.families},
                        {"externals", externals}, {"annotator", model_flags.endpoint}});
      out << "tasks " << all.size() << "\n";
      return skipped > 0 ? 1 : 0;
    }

    if (synth_cmd->parsed()) {
      std::vector<fs::path> assets, bgs;
      for (const auto& e : fs::directory_iterator(assets_dir)) {
        if (e.is_directory() && fs::exists(e.path() / "close.json")) assets.push_back(e.path());
      }
      if (fs::is_directory(backgrounds)) {
        for (const auto& e : fs::directory_iterator(backgrounds)) {
          if (e.path().extension() == ".png") bgs.push_back(e.path());
        }
      } else {
        bgs.push_back(backgrounds);
      }
      if (assets.empty()) throw Error(Errc::InvalidArgument, "no popup assets under " + assets_dir);
      std::sort(assets.begin(), assets.end());
      popup::SynthOptions so;
      so.seed = seed;
      so.per_background = per_background;
      const auto made = popup::synthesize(assets, bgs, out_dir, so);
      int noisy = 0, failed = 0;
      if (!trajectories_dir.empty()) {
        std::vector<fs::path> trajs;
        for (const auto& e : fs::directory_iterator(trajectories_dir)) {
          if (fs::exists(e.path() / "trajectory.json")) trajs.push_back(e.path());
        }
        std::sort(trajs.begin(), trajs.end());
        for (const auto& tdir : trajs) {
          try {
            const auto traj = agent::load_trajectory(tdir);
            Rng rng(derive_seed(seed, "noisy/" + tdir.filename().string()));
            const auto asset = popup::PopupAsset::load(assets[rng.uniform_index(assets.size())]);
            const int t = noisy_step > 0 ? noisy_step : 1 + static_cast<int>(rng.uniform_index(traj.steps.size()));
            agent::save_trajectory(popup::build_noisy_trajectory(traj, asset, t, rng),
                                   fs::path(out_dir) / "noisy" / tdir.filename());
            ++noisy;
          } catch (const Error& e) {
            ++failed;
            log_event("warn", "noisy trajectory skipped", {{"dir", tdir.string()}, {"error", e.what()}});
          }
        }
      }
      write_provenance(out_dir, "synth-popups", args,
                       {{"assets", assets_dir}, {"backgrounds", backgrounds}, {"seed", seed},
                        {"per_background", per_background}, {"trajectories", trajectories_dir}});
      out << "tasks " << made.size() << " noisy_trajectories " << noisy << "\n";
      return failed > 0 ? 1 : 0;
    }

    if (run_cmd->parsed()) {
      auto policy_client = open_model(model_flags);
      if (!policy_client) throw Error(Errc::InvalidArgument, "--model-endpoint is required");
      ModelFlags jf{judge_flags.endpoint, model_flags.name};
      auto judge = open_model(jf);
      const auto task_list = agent::load_agent_tasks(read_text_file(tasks_path));
      auto session = open_session(browser_flags);
      agent::ModelPolicy policy(*policy_client);
      std::vector<int> rewards;
      std::string results;
      int failed = 0;
      for (const auto& task : task_list) {
        auto traj = agent::run_episode(task, policy, *session, episode);
        try {
          traj.reward = agent::evaluate_reward(traj, task.checker, judge.get());
        } catch (const Error& e) {
          ++failed;
          log_event("warn", "reward unavailable", {{"task_id", task.task_id}, {"error", e.what()}});
        }
        if (traj.termination == agent::Termination::Error) ++failed;
        agent::save_trajectory(traj, fs::path(out_dir) / task.task_id);
        rewards.push_back(traj.reward);
        results += json{{"task_id", task.task_id},
                        {"termination", agent::termination_name(traj.termination)},
                        {"steps", traj.steps.size()},
                        {"reward", traj.reward}}
                       .dump() +
                   "\n";
      }
      write_text_file(fs::path(out_dir) / "results.jsonl", results);
      write_provenance(out_dir, "run-agent", args,
                       {{"tasks", tasks_path}, {"max_steps", episode.max_steps}, {"window", episode.window},
                        {"model_endpoint", model_flags.endpoint}, {"model_name", model_flags.name}});
      if (!rewards.empty()) out << "success_rate " << one_decimal(eval::success_rate(rewards)) << "\n";
      return failed > 0 ? 1 : 0;
    }

    if (eval_cmd->parsed()) {
      const auto manifest = eval::validate_manifest(read_text_file(bench_path), true);
      for (const auto& e : manifest.schema_errors) log_event("warn", "bad manifest line", {{"line", e.line}, {"error", e.message}});
      const fs::path root = fs::path(bench_path).parent_path();
      std::map<std::string, std::string> preds;
      std::unique_ptr<model::ModelClient> live;
      if (predictions.rfind("http://", 0) == 0 || predictions.rfind("https://", 0) == 0) {
        live = open_model({predictions, model_flags.name});
      } else {
        int bad = 0;
        for (const auto& j : read_jsonl(predictions, &bad)) {
          if (j.is_object() && j.contains("task_id") && j.contains("prediction")) {
            preds[j["task_id"].get<std::string>()] =
                j["prediction"].is_string() ? j["prediction"].get<std::string>() : j["prediction"].dump();
          }
        }
      }
      auto judge = open_model({judge_flags.endpoint, model_flags.name});
      std::vector<eval::Score> scores;
      int failed = static_cast<int>(manifest.schema_errors.size());
      for (const auto& inst : manifest.instances) {
        try {
          std::string pred;
          if (live) {
            pred = predict_live(*live, inst, root);
          } else if (auto it = preds.find(inst.task_id); it != preds.end()) {
            pred = it->second;
          } else {
            log_event("warn", "no prediction; scored as empty", {{"task_id", inst.task_id}});
          }
          scores.push_back(eval::score_instance(inst, pred, judge.get(), {}, per_point));
        } catch (const Error& e) {
          ++failed;
          log_event("warn", "instance not scored", {{"task_id", inst.task_id}, {"error", e.what()}});
        }
      }
      const auto report = eval::aggregate(scores);
      json rj = eval::to_json(report);
      rj["judge_points_per_score"] = per_point;
      write_text_file(report_path, rj.dump(2) + "\n");
      if (!csv_path.empty()) write_text_file(csv_path, eval::report_csv(report));
      write_provenance(fs::path(report_path).parent_path().empty() ? fs::path(".") : fs::path(report_path).parent_path(),
                       "eval", args, {{"bench", bench_path}, {"predictions", predictions}, {"judge_scale", per_point}});
      out << eval::report_csv(report);
      return failed > 0 ? 1 : 0;
    }

    if (validate_cmd->parsed()) {
      const bool bench = !bench_path.empty();
      const auto r = eval::validate_manifest(read_text_file(bench ? bench_path : manifest_path), bench);
      out << eval::to_json(r).dump(2) << "\n";
      out << "total " << r.total << "\n";
      return r.ok() ? 0 : 1;
    }

    if (report_cmd->parsed()) {
      if (!report_path.empty()) {
        const json r = json::parse(read_text_file(report_path));
        for (const auto& [k, v] : r.at("per_task").items()) out << "task " << k << " " << v.dump() << "\n";
        for (const auto& [k, v] : r.at("per_cognition").items()) out << "cognition " << k << " " << v.dump() << "\n";
        out << "overall " << r.at("overall").dump() << "\n";
      }
      if (!trajectories_dir.empty()) {
        std::vector<int> rewards;
        std::map<std::string, int> terminations;
        std::vector<fs::path> dirs;
        for (const auto& e : fs::directory_iterator(trajectories_dir)) {
          if (fs::exists(e.path() / "trajectory.json")) dirs.push_back(e.path());
        }
        std::sort(dirs.begin(), dirs.end());
        for (const auto& d : dirs) {
          const auto t = agent::load_trajectory(d);
          rewards.push_back(t.reward);
          ++terminations[std::string(agent::termination_name(t.termination))];
        }
        out << "episodes " << rewards.size() << "\n";
        for (const auto& [k, v] : terminations) out << "termination " << k << " " << v << "\n";
        out << "success_rate " << one_decimal(eval::success_rate(rewards)) << "\n";
      }
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    log_event("error", e.what(), {{"code", errc_name(e.code())}});
    const bool config = e.code() == Errc::InvalidArgument || e.code() == Errc::Io || e.code() == Errc::ConnectFailed ||
                        e.code() == Errc::EmptyInput || e.code() == Errc::SchemaError || e.code() == Errc::ParseError;
    return config ? 2 : 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace cogweb::cli
