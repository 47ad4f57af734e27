#include "cogweb/taskgen/generate.hpp"

#include <algorithm>
#include <cmath>
#include <regex>

#include "cogweb/error.hpp"
#include "cogweb/observation/marker.hpp"
#include "cogweb/taskgen/families.hpp"

namespace cogweb::tasks {

namespace fs = std::filesystem;

const char* const kPromptPackVersion = "prompts/3";

namespace {

const std::map<std::string, std::string, std::less<>>& prompt_pack() {
  static const std::map<std::string, std::string, std::less<>> pack = {
      {"element_attribute_recognition",
       "The element inside the red box is part of the page shown. Give its accessibility role and its "
       "accessible name in the form: role: <role>, name: <name>"},
      {"sub_elements_prediction",
       "Clicking the element inside the red box reveals new elements on the same page. List each new "
       "element on its own line as: <role> '<name>'"},
      {"page_change_prediction",
       "Describe how the page will change after the element inside the red box is clicked."},
      {"next_page_prediction/mc",
       "The first image shows a page with one element in a red box. Which of the candidate pages appears "
       "after clicking it? Answer with the candidate's letter only."},
      {"next_page_prediction/open",
       "Describe the page that appears after clicking the element inside the red box."},
      {"source_element_prediction",
       "The first image marks several elements with lettered boxes. The second image is the page reached "
       "by clicking one of them. Answer with the letter of that element only."},
      {"element_understanding",
       "Explain the element inside the red box under three headings: Visible Traits, On-page Location, "
       "User-facing Function."},
      {"webpage_understanding",
       "Explain this web page under three headings: Layout Organization, Key Element Analysis, Summary."},
      {"caption_qa/qa", "Answer the question about this page."},
      {"caption_qa/caption", "Write a caption describing this page."},
      {"user_intention_prediction",
       "These screenshots show the steps a user took, in order. State the instruction the user was "
       "following."},
      {"single_step_web_task",
       "Candidate elements are marked with lettered boxes. Which element should be clicked next to carry "
       "out the instruction? Answer with the letter only."},
      {"popup_close",
       "A popup covers the page. List every element you could use to close it, by label, separated by "
       "commas."},
  };
  return pack;
}

const std::map<std::string, std::string, std::less<>>& annotator_pack() {
  static const std::map<std::string, std::string, std::less<>> pack = {
      {"page_change_prediction",
       "The first image shows a page with one element in a red box; the second shows the page after it "
       "was clicked. In two or three sentences, describe how the page changed."},
      {"next_page_prediction/open",
       "The first image shows a page with one element in a red box; the second shows the page reached "
       "by clicking it. Describe the new page in two or three sentences."},
      {"element_understanding",
       "Describe the element in the red box using exactly these headings, each on its own line:\n"
       "Visible Traits:\nOn-page Location:\nUser-facing Function:"},
      {"webpage_understanding",
       "Describe this web page using exactly these headings, each on its own line:\n"
       "Layout Organization:\nKey Element Analysis:\nSummary:"},
  };
  return pack;
}

constexpr const char* kConfidenceSuffix =
    "\n\nFinish with a final line of the form 'Confidence: <number between 0 and 1>' rating how sure you are.";

const std::string& lookup(const std::map<std::string, std::string, std::less<>>& pack, std::string_view family,
                          std::string_view variant) {
  std::string key(family);
  if (!variant.empty()) key += "/" + std::string(variant);
  auto it = pack.find(key);
  if (it == pack.end()) it = pack.find(family);
  if (it == pack.end()) throw Error(Errc::InvalidArgument, "no prompt for " + key);
  return it->second;
}

std::string knowledge_of(std::string_view family) {
  const auto* f = find_family(family);
  if (!f) throw Error(Errc::InvalidArgument, "unknown family " + std::string(family));
  return std::string(knowledge_name(f->knowledge));
}

TaskInstance base_instance(std::string family, std::string id, std::string metric, std::string_view variant = {}) {
  TaskInstance t;
  t.task_id = std::move(id);
  t.knowledge = knowledge_of(family);
  t.prompt = family_prompt(family, variant);
  t.family = std::move(family);
  t.metric = std::move(metric);
  return t;
}

json record_source(const crawl::InteractionRecord& r) {
  return {{"kind", "crawl"}, {"record", r.id}, {"layer", r.layer}, {"pre_url", r.pre_url},
          {"post_url", r.post_url}, {"prompt_pack", kPromptPackVersion}};
}

std::string letter(std::size_t i) { return std::string(1, static_cast<char>('A' + i)); }

std::string page_state_key(const crawl::InteractionRecord& r) {
  return r.pre_url + "\n" + obs::serialize_ax(r.pre_ax);
}

}  // namespace

const std::string& family_prompt(std::string_view family, std::string_view variant) {
  return lookup(prompt_pack(), family, variant);
}

const std::string& annotator_prompt(std::string_view family, std::string_view variant) {
  return lookup(annotator_pack(), family, variant);
}

std::pair<std::string, std::optional<double>> split_confidence(std::string_view reply) {
  static const std::regex conf(R"(^\W*confidence\W*[:=][\s*_]*([0-9]*\.?[0-9]+)\s*(%?))", std::regex::icase);
  std::vector<std::string> kept;
  std::optional<double> value;
  for (const auto& line : split_lines(reply)) {
    std::smatch m;
    if (std::regex_search(line, m, conf)) {
      double v = std::stod(m[1].str());
      if (m[2].str() == "%" || v > 1.0) v /= 100.0;
      value = std::clamp(v, 0.0, 1.0);
      continue;
    }
    kept.push_back(line);
  }
  std::string text;
  for (const auto& l : kept) text += l + "\n";
  return {trim(text), value};
}

Annotation annotate(const std::vector<Image>& images, const std::string& prompt, model::ModelClient& client,
                    double threshold, int max_attempts) {
  model::ChatRequest req;
  req.messages.push_back({"user", prompt + kConfidenceSuffix, images});
  Annotation best;
  for (int attempt = 1; attempt <= std::max(max_attempts, 1); ++attempt) {
    std::string reply;
    try {
      reply = client.complete(req);
    } catch (const Error& e) {
      if (e.code() == Errc::EndpointUnreachable || e.code() == Errc::RateLimited) {
        throw Error(Errc::AnnotatorUnreachable, e.what());
      }
      throw;
    }
    auto [text, conf] = split_confidence(reply);
    const double c = conf.value_or(0.0);
    if (attempt == 1 || c > best.confidence) best = {text, c, attempt, false};
    best.attempts = attempt;
    if (c >= threshold) return {std::move(text), c, attempt, true};
  }
  return best;
}

std::string ImageSink::put(const Image& img) {
  const std::string rel = "images/" + img.content_hash() + ".png";
  if (written_.insert(rel).second) {
    const fs::path full = root_ / rel;
    if (!fs::exists(full)) {
      fs::create_directories(full.parent_path());
      write_png(img, full);
    }
  }
  return rel;
}

std::string attribute_answer(const std::string& role, const std::string& name) {
  return "role: " + role + ", name: " + name;
}

std::optional<std::pair<std::string, std::string>> parse_attribute_answer(std::string_view text) {
  const std::string s = trim(text);
  if (s.rfind("role: ", 0) != 0) return std::nullopt;
  const auto sep = s.find(", name: ");
  if (sep == std::string::npos) return std::nullopt;
  return std::make_pair(s.substr(6, sep - 6), s.substr(sep + 8));
}

TaskInstance gen_element_attribute(const crawl::InteractionRecord& r, ImageSink& sink) {
  if (r.element.role.empty() || r.element.name.empty()) {
    throw Error(Errc::SkipRecord, "record " + r.id + " lacks a role or name");
  }
  auto t = base_instance("element_attribute_recognition", "element_attribute_recognition-" + r.id, "rouge_l");
  t.images = {sink.put(r.shots.base_rect)};
  t.gold = {"text", attribute_answer(r.element.role, r.element.name)};
  t.source = record_source(r);
  return t;
}

TaskInstance gen_subelements(const crawl::InteractionRecord& r, ImageSink& sink) {
  if (r.diff.url_changed) throw Error(Errc::SkipRecord, "record " + r.id + " navigates away");
  if (r.diff.added.empty()) throw Error(Errc::SkipRecord, "record " + r.id + " reveals no elements");
  auto t = base_instance("sub_elements_prediction", "sub_elements_prediction-" + r.id, "rouge_l");
  t.images = {sink.put(r.shots.base_rect)};
  std::string gold;
  for (const auto& a : r.diff.added) {
    if (!gold.empty()) gold += "\n";
    gold += a.role + " '" + a.name + "'";
  }
  t.gold = {"text", gold};
  t.source = record_source(r);
  return t;
}

TaskInstance gen_page_change(const crawl::InteractionRecord& r, const Annotation& a, ImageSink& sink) {
  if (!a.accepted) throw Error(Errc::AnnotationRejected, "annotation for " + r.id + " below threshold");
  auto t = base_instance("page_change_prediction", "page_change_prediction-" + r.id, "rouge_l");
  t.images = {sink.put(r.shots.base_rect)};
  t.gold = {"text", a.text};
  t.source = record_source(r);
  t.source["annotation"] = {{"confidence", a.confidence}, {"attempts", a.attempts}};
  return t;
}

TaskInstance gen_next_page(const crawl::CrawlStore& store, const crawl::InteractionRecord& r, NextPageVariant variant,
                           Rng& rng, ImageSink& sink, const Annotation* annotation) {
  if (variant == NextPageVariant::Open) {
    if (!annotation || !annotation->accepted) {
      throw Error(Errc::AnnotationRejected, "no accepted annotation for " + r.id);
    }
    auto t = base_instance("next_page_prediction", "next_page_prediction-open-" + r.id, "rouge_l", "open");
    t.images = {sink.put(r.shots.base_rect)};
    t.gold = {"text", annotation->text};
    t.source = record_source(r);
    t.source["annotation"] = {{"confidence", annotation->confidence}, {"attempts", annotation->attempts}};
    return t;
  }
  const std::string gold_hash = r.shots.click.content_hash();
  std::vector<const Image*> pool;
  std::set<std::string> hashes{gold_hash};
  for (const auto& other : store.records) {
    if (&other == &r || !other.diff.url_changed) continue;
    if (hashes.insert(other.shots.click.content_hash()).second) pool.push_back(&other.shots.click);
  }
  if (pool.size() < 3) {
    throw Error(Errc::InsufficientDistractors,
                "need 3 distinct post-click pages besides the answer, found " + std::to_string(pool.size()));
  }
  const int n = pool.size() >= 4 ? rng.uniform_int(3, 4) : 3;
  rng.shuffle(pool);
  std::vector<const Image*> options{&r.shots.click};
  options.insert(options.end(), pool.begin(), pool.begin() + n);
  rng.shuffle(options);
  auto t = base_instance("next_page_prediction", "next_page_prediction-mc-" + r.id, "accuracy", "mc");
  t.images = {sink.put(r.shots.base_rect)};
  for (std::size_t i = 0; i < options.size(); ++i) {
    t.choices.push_back({letter(i), sink.put(*options[i]), ""});
    if (options[i] == &r.shots.click) t.gold = {"choice", letter(i)};
  }
  t.source = record_source(r);
  return t;
}

TaskInstance gen_source_element(const crawl::CrawlStore& store, const crawl::InteractionRecord& target, Rng& rng,
                                ImageSink& sink) {
  const std::string key = page_state_key(target);
  std::vector<const crawl::InteractionRecord*> others;
  for (const auto& r : store.records) {
    if (&r == &target || r.id == target.id || page_state_key(r) != key) continue;
    const bool same_box = std::any_of(others.begin(), others.end(), [&](const crawl::InteractionRecord* o) {
      return o->element.location == r.element.location;
    });
    if (!same_box && r.element.location != target.element.location) others.push_back(&r);
  }
  if (others.size() + 1 < 4) {
    throw Error(Errc::InsufficientCandidates,
                "page of record " + target.id + " has " + std::to_string(others.size() + 1) + " recorded elements");
  }
  const int k = rng.uniform_int(4, static_cast<int>(std::min<std::size_t>(10, others.size() + 1)));
  rng.shuffle(others);
  std::vector<const crawl::InteractionRecord*> picked{&target};
  picked.insert(picked.end(), others.begin(), others.begin() + (k - 1));
  rng.shuffle(picked);
  std::vector<obs::LabeledBox> boxes;
  auto t = base_instance("source_element_prediction", "source_element_prediction-" + target.id, "accuracy");
  for (std::size_t i = 0; i < picked.size(); ++i) {
    boxes.push_back({picked[i]->element.location, static_cast<char>('A' + i)});
    t.choices.push_back({letter(i), "", picked[i]->element.role + " '" + picked[i]->element.name + "'"});
    if (picked[i] == &target) t.gold = {"choice", letter(i)};
  }
  t.images = {sink.put(obs::draw_labeled_markers(target.shots.base, boxes)), sink.put(target.shots.click)};
  t.source = record_source(target);
  json locs = json::array();
  for (const auto& b : boxes) locs.push_back({b.box.x, b.box.y, b.box.w, b.box.h});
  t.source["candidate_boxes"] = locs;
  return t;
}

const std::vector<std::string> kElementSections = {"Visible Traits", "On-page Location", "User-facing Function"};
const std::vector<std::string> kPageSections = {"Layout Organization", "Key Element Analysis", "Summary"};

void require_sections(std::string_view text, const std::vector<std::string>& headings) {
  const std::string lower = to_lower(text);
  for (const auto& h : headings) {
    if (lower.find(to_lower(h)) == std::string::npos) {
      throw Error(Errc::MissingSections, "annotation lacks the '" + h + "' section");
    }
  }
}

TaskInstance gen_element_understanding(const crawl::InteractionRecord& r, const Annotation& a, ImageSink& sink) {
  if (!a.accepted) throw Error(Errc::AnnotationRejected, "annotation for " + r.id + " below threshold");
  require_sections(a.text, kElementSections);
  auto t = base_instance("element_understanding", "element_understanding-" + r.id, "lvm_judge");
  t.images = {sink.put(r.shots.base_rect)};
  t.gold = {"text", a.text};
  t.source = record_source(r);
  t.source["annotation"] = {{"confidence", a.confidence}, {"attempts", a.attempts}};
  return t;
}

TaskInstance gen_webpage_understanding(const std::string& page_key, const Image& page, const Annotation& a,
                                       ImageSink& sink) {
  if (!a.accepted) throw Error(Errc::AnnotationRejected, "annotation for page " + page_key + " below threshold");
  require_sections(a.text, kPageSections);
  const std::string image = sink.put(page);
  auto t = base_instance("webpage_understanding", "webpage_understanding-" + page.content_hash(), "lvm_judge");
  t.images = {image};
  t.gold = {"text", a.text};
  t.source = {{"kind", "crawl"}, {"page", page_key}, {"prompt_pack", kPromptPackVersion},
              {"annotation", {{"confidence", a.confidence}, {"attempts", a.attempts}}}};
  return t;
}

std::optional<Corpus> parse_corpus(std::string_view name) {
  if (name == "multi_ui_caption_qa") return Corpus::MultiUiCaptionQa;
  if (name == "multi_ui_single_step") return Corpus::MultiUiSingleStep;
  if (name == "mind2web_trajectories") return Corpus::Mind2WebTrajectories;
  return std::nullopt;
}

namespace {

std::string need_string(const json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string() || j[key].get<std::string>().empty()) {
    throw Error(Errc::SchemaMismatch, std::string("field '") + key + "' missing or not a nonempty string");
  }
  return j[key].get<std::string>();
}

Image load_image(const fs::path& root, const std::string& rel) {
  const fs::path p = root / rel;
  if (!fs::exists(p)) throw Error(Errc::SchemaMismatch, "image " + rel + " not found");
  return read_png(p);
}

std::string record_id(const json& j, std::size_t index) {
  if (j.contains("id") && j["id"].is_string()) return j["id"].get<std::string>();
  if (j.contains("id") && j["id"].is_number_integer()) return std::to_string(j["id"].get<long long>());
  return std::to_string(index);
}

TaskInstance convert_caption_qa(const json& j, const std::string& id, const fs::path& root, ImageSink& sink) {
  const std::string subtype = need_string(j, "subtype");
  const bool qa = subtype == "embedded_qa" || subtype == "webpage_qa";
  if (!qa && subtype != "embedded_caption" && subtype != "webpage_caption") {
    throw Error(Errc::SchemaMismatch, "unknown subtype '" + subtype + "'");
  }
  auto t = base_instance("caption_qa", "caption_qa-" + id, qa ? "rouge_l" : "lvm_judge", qa ? "qa" : "caption");
  t.images = {sink.put(load_image(root, need_string(j, "image")))};
  if (qa) t.prompt += "\nQuestion: " + need_string(j, "question");
  t.gold = {"text", need_string(j, "answer")};
  t.source = {{"kind", "multi_ui_caption_qa"}, {"id", id}, {"subtype", subtype}, {"prompt_pack", kPromptPackVersion}};
  return t;
}

TaskInstance convert_single_step(const json& j, const std::string& id, const fs::path& root, ImageSink& sink) {
  const Image img = load_image(root, need_string(j, "image"));
  const std::string instruction = need_string(j, "instruction");
  if (!j.contains("candidates") || !j["candidates"].is_array() || j["candidates"].empty() ||
      j["candidates"].size() > 26) {
    throw Error(Errc::SchemaMismatch, "candidates must be a list of 1..26 entries");
  }
  if (!j.contains("answer_index") || !j["answer_index"].is_number_integer()) {
    throw Error(Errc::SchemaMismatch, "answer_index missing");
  }
  const auto answer = j["answer_index"].get<long long>();
  if (answer < 0 || answer >= static_cast<long long>(j["candidates"].size())) {
    throw Error(Errc::SchemaMismatch, "answer_index out of range");
  }
  std::vector<obs::LabeledBox> boxes;
  for (const auto& c : j["candidates"]) {
    const auto& b = c.at("bbox");
    if (!b.is_array() || b.size() != 4) throw Error(Errc::SchemaMismatch, "bbox must be [x,y,w,h]");
    boxes.push_back({{b[0].get<int>(), b[1].get<int>(), b[2].get<int>(), b[3].get<int>()},
                     static_cast<char>('A' + boxes.size())});
  }
  auto t = base_instance("single_step_web_task", "single_step_web_task-" + id, "accuracy");
  t.images = {sink.put(obs::draw_labeled_markers(img, boxes))};
  t.prompt += "\nInstruction: " + instruction;
  for (std::size_t i = 0; i < boxes.size(); ++i) t.choices.push_back({letter(i), "", ""});
  t.gold = {"choice", letter(static_cast<std::size_t>(answer))};
  t.source = {{"kind", "multi_ui_single_step"}, {"id", id}, {"prompt_pack", kPromptPackVersion}};
  return t;
}

TaskInstance convert_intention(const json& j, const std::string& id, const fs::path& root, ImageSink& sink) {
  const std::string instruction = need_string(j, "instruction");
  if (!j.contains("screenshots") || !j["screenshots"].is_array() || j["screenshots"].empty()) {
    throw Error(Errc::SchemaMismatch, "screenshots must be a nonempty list");
  }
  auto t = base_instance("user_intention_prediction", "user_intention_prediction-" + id, "lvm_judge");
  for (const auto& s : j["screenshots"]) {
    if (!s.is_string()) throw Error(Errc::SchemaMismatch, "screenshot paths must be strings");
    t.images.push_back(sink.put(load_image(root, s.get<std::string>())));
  }
  t.gold = {"text", instruction};
  t.source = {{"kind", "mind2web_trajectories"}, {"id", id}, {"prompt_pack", kPromptPackVersion}};
  return t;
}

}  // namespace

std::vector<TaskInstance> convert_external(Corpus corpus, const std::vector<json>& records, const fs::path& source_root,
                                           ImageSink& sink, ConversionStats* stats) {
  std::vector<TaskInstance> out;
  ConversionStats local;
  ConversionStats& st = stats ? *stats : local;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const json& j = records[i];
    try {
      if (!j.is_object()) throw Error(Errc::SchemaMismatch, "record is not an object");
      const std::string id = record_id(j, i);
      switch (corpus) {
        case Corpus::MultiUiCaptionQa: out.push_back(convert_caption_qa(j, id, source_root, sink)); break;
        case Corpus::MultiUiSingleStep: out.push_back(convert_single_step(j, id, source_root, sink)); break;
        case Corpus::Mind2WebTrajectories: out.push_back(convert_intention(j, id, source_root, sink)); break;
      }
      ++st.converted;
    } catch (const Error& e) {
      ++st.skipped;
      log_event("warn", "skipped external record", {{"index", i}, {"error", e.what()}});
    } catch (const json::exception& e) {
      ++st.skipped;
      log_event("warn", "skipped external record", {{"index", i}, {"error", std::string("SchemaMismatch: ") + e.what()}});
    }
  }
  return out;
}

std::string manifest_jsonl(const std::vector<TaskInstance>& tasks) {
  std::string out;
  for (const auto& t : tasks) out += to_json(t).dump() + "\n";
  return out;
}

std::vector<TaskInstance> generate_from_store(const crawl::CrawlStore& store, const fs::path& out,
                                              const GenerateOptions& options, GenerateStats* stats) {
  GenerateStats local;
  GenerateStats& st = stats ? *stats : local;
  ImageSink sink(out);
  std::vector<TaskInstance> tasks;
  auto wanted = [&](std::string_view f) { return options.families.empty() || options.families.count(std::string(f)); };
  auto attempt = [&](std::string_view family, auto&& make) {
    if (!wanted(family)) return;
    try {
      tasks.push_back(make());
      ++st.emitted[std::string(family)];
    } catch (const Error& e) {
      ++st.skipped[std::string(family)];
      log_event("debug", "no instance", {{"family", family}, {"error", e.what()}});
    }
  };
  auto ask = [&](std::vector<Image> images, std::string_view family, std::string_view variant = {}) {
    return annotate(images, annotator_prompt(family, variant), *options.annotator, options.threshold,
                    options.max_attempts);
  };
  auto rng_for = [&](std::string_view family, const std::string& id) {
    return Rng(derive_seed(options.seed, std::string(family) + "/" + store.site + "/" + id));
  };

  std::set<std::string> pages_done;
  for (const auto& r : store.records) {
    attempt("element_attribute_recognition", [&] { return gen_element_attribute(r, sink); });
    attempt("sub_elements_prediction", [&] { return gen_subelements(r, sink); });
    if (r.diff.url_changed) {
      attempt("next_page_prediction", [&] {
        Rng rng = rng_for("next_page_prediction", r.id);
        return gen_next_page(store, r, NextPageVariant::MultipleChoice, rng, sink);
      });
    }
    attempt("source_element_prediction", [&] {
      Rng rng = rng_for("source_element_prediction", r.id);
      return gen_source_element(store, r, rng, sink);
    });
    if (!options.annotator) continue;
    attempt("page_change_prediction",
            [&] { return gen_page_change(r, ask({r.shots.base_rect, r.shots.click}, "page_change_prediction"), sink); });
    if (r.diff.url_changed) {
      attempt("next_page_prediction", [&] {
        Rng rng = rng_for("next_page_prediction/open", r.id);
        const auto a = ask({r.shots.base_rect, r.shots.click}, "next_page_prediction", "open");
        return gen_next_page(store, r, NextPageVariant::Open, rng, sink, &a);
      });
    }
    attempt("element_understanding", [&] {
      return gen_element_understanding(r, ask({r.shots.base_rect, r.shots.standalone}, "element_understanding"), sink);
    });
    if (pages_done.insert(r.shots.base.content_hash()).second) {
      attempt("webpage_understanding", [&] {
        return gen_webpage_understanding(r.pre_url, r.shots.base, ask({r.shots.base}, "webpage_understanding"), sink);
      });
    }
  }
  write_text_file(out / "manifest.jsonl", manifest_jsonl(tasks));
  return tasks;
}

}  // namespace cogweb::tasks
