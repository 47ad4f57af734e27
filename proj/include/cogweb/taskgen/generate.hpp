#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cogweb/crawler/crawler.hpp"
#include "cogweb/model/client.hpp"
#include "cogweb/taskgen/task.hpp"

namespace cogweb::tasks {

extern const char* const kPromptPackVersion;

// Fixed instruction shown to the model for a family. Variant selects
// "mc"/"open" for next-page prediction and "qa"/"caption" for caption_qa.
const std::string& family_prompt(std::string_view family, std::string_view variant = {});

// Annotator instructions used when gold text comes from a model.
const std::string& annotator_prompt(std::string_view family, std::string_view variant = {});

struct Annotation {
  std::string text;
  double confidence = 0;
  int attempts = 0;
  bool accepted = false;
};

// Confidence from a trailing "Confidence: x" line (x in [0,1], or a
// percentage). Returns the reply with that line removed.
std::pair<std::string, std::optional<double>> split_confidence(std::string_view reply);

// Queries the annotator until a reply reaches `threshold`, at most
// `max_attempts` times. A rejected annotation carries the best attempt.
// Endpoint failures raise AnnotatorUnreachable.
Annotation annotate(const std::vector<Image>& images, const std::string& prompt, model::ModelClient& client,
                    double threshold = 0.5, int max_attempts = 3);

// Writes images once under <root>/images/<content-hash>.png and returns the
// path relative to root.
class ImageSink {
 public:
  explicit ImageSink(std::filesystem::path root) : root_(std::move(root)) {}
  std::string put(const Image& img);
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
  std::set<std::string> written_;
};

std::string attribute_answer(const std::string& role, const std::string& name);
// Inverse of attribute_answer.
std::optional<std::pair<std::string, std::string>> parse_attribute_answer(std::string_view text);

TaskInstance gen_element_attribute(const crawl::InteractionRecord& r, ImageSink& sink);
TaskInstance gen_subelements(const crawl::InteractionRecord& r, ImageSink& sink);
TaskInstance gen_page_change(const crawl::InteractionRecord& r, const Annotation& a, ImageSink& sink);

enum class NextPageVariant { MultipleChoice, Open };

// `annotation` is required for the open variant.
TaskInstance gen_next_page(const crawl::CrawlStore& store, const crawl::InteractionRecord& r, NextPageVariant variant,
                           Rng& rng, ImageSink& sink, const Annotation* annotation = nullptr);
TaskInstance gen_source_element(const crawl::CrawlStore& store, const crawl::InteractionRecord& target, Rng& rng,
                                ImageSink& sink);

extern const std::vector<std::string> kElementSections;
extern const std::vector<std::string> kPageSections;

// Throws MissingSections naming the first heading not found in `text`.
void require_sections(std::string_view text, const std::vector<std::string>& headings);

TaskInstance gen_element_understanding(const crawl::InteractionRecord& r, const Annotation& a, ImageSink& sink);
TaskInstance gen_webpage_understanding(const std::string& page_key, const Image& page, const Annotation& a,
                                       ImageSink& sink);

enum class Corpus { MultiUiCaptionQa, MultiUiSingleStep, Mind2WebTrajectories };
std::optional<Corpus> parse_corpus(std::string_view name);

struct ConversionStats {
  int converted = 0;
  int skipped = 0;
};

// Source schemas (image paths relative to source_root):
//   multi_ui_caption_qa:   {"id", "image", "subtype": embedded_caption|embedded_qa|
//                           webpage_caption|webpage_qa, "question"?, "answer"}
//   multi_ui_single_step:  {"id", "image", "instruction", "candidates": [{"bbox": [x,y,w,h]}],
//                           "answer_index"}
//   mind2web_trajectories: {"id", "instruction", "screenshots": [path, ...]}
// Malformed records are logged and skipped.
std::vector<TaskInstance> convert_external(Corpus corpus, const std::vector<json>& records,
                                           const std::filesystem::path& source_root, ImageSink& sink,
                                           ConversionStats* stats = nullptr);

struct GenerateOptions {
  std::uint64_t seed = 7;
  std::set<std::string> families;  // empty means all crawl-derived families
  model::ModelClient* annotator = nullptr;
  double threshold = 0.5;
  int max_attempts = 3;
};

struct GenerateStats {
  std::map<std::string, int> emitted;
  std::map<std::string, int> skipped;
};

// Derives every crawl-based family from the store and writes
// <out>/manifest.jsonl plus images. Families that need an annotator are
// skipped when none is configured.
std::vector<TaskInstance> generate_from_store(const crawl::CrawlStore& store, const std::filesystem::path& out,
                                              const GenerateOptions& options, GenerateStats* stats = nullptr);

std::string manifest_jsonl(const std::vector<TaskInstance>& tasks);

}  // namespace cogweb::tasks
