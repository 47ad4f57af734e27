#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cogweb/image.hpp"
#include "cogweb/util.hpp"

namespace cogweb::model {

struct ChatMessage {
  std::string role;  // system, user or assistant
  std::string text;
  std::vector<Image> images;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_tokens = 2048;
  // Per-request overrides of the client defaults.
  std::string endpoint;
  std::string model_name;
};

// Throws InvalidArgument unless there is at least one message, every role is
// known and images only appear on user messages.
void validate_request(const ChatRequest& req);

// Chat-completions request body with images as base64 PNG data URLs.
json request_body(const ChatRequest& req, const std::string& default_model);

// Extracts the assistant text from a chat-completions response body.
std::string response_text(const json& body);

class ModelClient {
 public:
  virtual ~ModelClient() = default;
  virtual std::string complete(const ChatRequest& req) = 0;
};

struct HttpClientOptions {
  std::string endpoint;
  std::string model_name;
  std::string api_key;  // defaults to $COGWEB_API_KEY
  int max_attempts = 3;
  std::chrono::milliseconds backoff{250};
  int max_in_flight = 4;
  std::chrono::seconds timeout{180};
};

// Talks to an OpenAI-compatible endpoint. The endpoint may be a base URL
// ("http://host:8000") or the full chat-completions path. Shareable across
// threads; at most max_in_flight requests run at once.
class HttpChatClient final : public ModelClient {
 public:
  explicit HttpChatClient(HttpClientOptions options);
  ~HttpChatClient() override;

  std::string complete(const ChatRequest& req) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct JudgeOptions {
  int max_attempts = 3;
  std::string rubric;  // empty selects the built-in rubric
};

extern const char* const kJudgeRubricVersion;

// First integer in the text if it lies in 1..5.
std::optional<int> parse_judge_score(std::string_view text);

// Asks the model for a 1..5 score of `prediction` against `reference`.
// Unparseable or out-of-range replies are retried; after max_attempts the
// call throws JudgeParseError. Endpoint failures become JudgeUnreachable.
int judge(ModelClient& client, const std::string& prediction, const std::string& reference,
          const std::vector<Image>& context_images, const JudgeOptions& options = {});

// Score-to-percentage mapping used in reports.
double judge_percentage(int score, double per_point = 20.0);

}  // namespace cogweb::model
