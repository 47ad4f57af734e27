#include "cogweb/model/client.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>
#include <regex>
#include <semaphore>
#include <thread>

#include "cogweb/error.hpp"

namespace cogweb::model {

void validate_request(const ChatRequest& req) {
  if (req.messages.empty()) throw Error(Errc::InvalidArgument, "chat request has no messages");
  for (const auto& m : req.messages) {
    if (m.role != "system" && m.role != "user" && m.role != "assistant") {
      throw Error(Errc::InvalidArgument, "unknown message role '" + m.role + "'");
    }
    if (!m.images.empty() && m.role != "user") {
      throw Error(Errc::InvalidArgument, "images are only allowed on user messages");
    }
  }
}

json request_body(const ChatRequest& req, const std::string& default_model) {
  json messages = json::array();
  for (const auto& m : req.messages) {
    if (m.images.empty()) {
      messages.push_back({{"role", m.role}, {"content", m.text}});
      continue;
    }
    json parts = json::array();
    for (const auto& img : m.images) {
      parts.push_back({{"type", "image_url"},
                       {"image_url", {{"url", "data:image/png;base64," + base64_encode(encode_png(img))}}}});
    }
    parts.push_back({{"type", "text"}, {"text", m.text}});
    messages.push_back({{"role", m.role}, {"content", parts}});
  }
  return {{"model", req.model_name.empty() ? default_model : req.model_name},
          {"messages", messages},
          {"temperature", req.temperature},
          {"max_tokens", req.max_tokens}};
}

std::string response_text(const json& body) {
  const auto& content = body.at("choices").at(0).at("message").at("content");
  if (content.is_string()) return content.get<std::string>();
  std::string out;
  for (const auto& part : content) {
    if (part.value("type", "") == "text") out += part.value("text", "");
  }
  return out;
}

namespace {

struct Target {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Target split_endpoint(const std::string& url) {
  static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, re)) throw Error(Errc::InvalidArgument, "bad model endpoint '" + url + "'");
  std::string path = m[2].matched ? m[2].str() : "";
  while (!path.empty() && path.back() == '/') path.pop_back();
  if (path.size() < 17 || path.compare(path.size() - 17, 17, "/chat/completions") != 0) {
    path += path.size() >= 3 && path.compare(path.size() - 3, 3, "/v1") == 0 ? "/chat/completions"
                                                                             : "/v1/chat/completions";
  }
  return {m[1].str(), path};
}

}  // namespace

struct HttpChatClient::Impl {
  HttpClientOptions options;
  std::counting_semaphore<1024> slots;

  explicit Impl(HttpClientOptions o) : options(std::move(o)), slots(std::clamp(options.max_in_flight, 1, 1024)) {}
};

HttpChatClient::HttpChatClient(HttpClientOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {
  if (impl_->options.api_key.empty()) {
    if (const char* key = std::getenv("COGWEB_API_KEY")) impl_->options.api_key = key;
  }
  if (impl_->options.max_attempts < 1) impl_->options.max_attempts = 1;
}

HttpChatClient::~HttpChatClient() = default;

std::string HttpChatClient::complete(const ChatRequest& req) {
  validate_request(req);
  const auto& o = impl_->options;
  const std::string endpoint = req.endpoint.empty() ? o.endpoint : req.endpoint;
  if (endpoint.empty()) throw Error(Errc::InvalidArgument, "no model endpoint configured");
  const Target target = split_endpoint(endpoint);
  const std::string body = request_body(req, o.model_name).dump();

  impl_->slots.acquire();
  struct Release {
    std::counting_semaphore<1024>& s;
    ~Release() { s.release(); }
  } release{impl_->slots};

  std::string last_error;
  bool rate_limited = false;
  for (int attempt = 1; attempt <= o.max_attempts; ++attempt) {
    if (attempt > 1) std::this_thread::sleep_for(o.backoff * (1 << (attempt - 2)));
    httplib::Client cli(target.origin);
    cli.set_connection_timeout(std::chrono::seconds(10));
    cli.set_read_timeout(o.timeout);
    cli.set_write_timeout(o.timeout);
    httplib::Headers headers;
    if (!o.api_key.empty()) headers.emplace("Authorization", "Bearer " + o.api_key);
    auto res = cli.Post(target.path, headers, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      rate_limited = false;
      continue;
    }
    if (res->status == 429) {
      rate_limited = true;
      last_error = "HTTP 429";
      continue;
    }
    rate_limited = false;
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw Error(Errc::EndpointUnreachable,
                  "HTTP " + std::to_string(res->status) + " from " + endpoint + ": " + res->body.substr(0, 200));
    }
    try {
      return response_text(json::parse(res->body));
    } catch (const json::exception& e) {
      throw Error(Errc::EndpointUnreachable, std::string("malformed completion response: ") + e.what());
    }
  }
  if (rate_limited) throw Error(Errc::RateLimited, endpoint + " kept rejecting requests (" + last_error + ")");
  throw Error(Errc::EndpointUnreachable, endpoint + ": " + last_error);
}

const char* const kJudgeRubricVersion = "judge-rubric/1";

namespace {

constexpr const char* kDefaultRubric =
    "You are grading a web-understanding answer against a reference.\n"
    "Score the candidate from 1 to 5:\n"
    "5 = fully consistent with the reference and the screenshot, nothing important missing\n"
    "4 = consistent, minor omissions\n"
    "3 = partly correct, some wrong or missing points\n"
    "2 = mostly wrong or vague\n"
    "1 = wrong or unrelated\n"
    "Reply with a single integer from 1 to 5 and nothing else.";

}  // namespace

std::optional<int> parse_judge_score(std::string_view text) {
  static const std::regex first_int(R"((\d+))");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_search(text.begin(), text.end(), m, first_int)) return std::nullopt;
  const std::string digits = m[1].str();
  if (digits.size() > 1) return std::nullopt;
  const int v = digits[0] - '0';
  if (v < 1 || v > 5) return std::nullopt;
  return v;
}

int judge(ModelClient& client, const std::string& prediction, const std::string& reference,
          const std::vector<Image>& context_images, const JudgeOptions& options) {
  ChatRequest req;
  req.messages.push_back({"system", options.rubric.empty() ? kDefaultRubric : options.rubric, {}});
  req.messages.push_back(
      {"user", "Reference answer:\n" + reference + "\n\nCandidate answer:\n" + prediction + "\n\nScore:",
       context_images});
  std::string last;
  for (int attempt = 0; attempt < std::max(options.max_attempts, 1); ++attempt) {
    try {
      last = client.complete(req);
    } catch (const Error& e) {
      if (e.code() == Errc::EndpointUnreachable || e.code() == Errc::RateLimited) {
        throw Error(Errc::JudgeUnreachable, e.what());
      }
      throw;
    }
    if (const auto score = parse_judge_score(last)) return *score;
  }
  throw Error(Errc::JudgeParseError, "no score in 1..5 after " + std::to_string(options.max_attempts) +
                                         " attempts; last reply: " + last.substr(0, 120));
}

double judge_percentage(int score, double per_point) { return score * per_point; }

}  // namespace cogweb::model
