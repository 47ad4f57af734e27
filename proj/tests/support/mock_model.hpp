#pragma once

#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "cogweb/model/client.hpp"

namespace cogweb::testing {

std::filesystem::path fixture(const std::string& name);
// Fresh empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& tag);

// Returns canned replies in order and records every request.
class ScriptedClient final : public model::ModelClient {
 public:
  explicit ScriptedClient(std::vector<std::string> replies, bool repeat_last = false)
      : replies_(replies.begin(), replies.end()), repeat_last_(repeat_last) {}
  std::string complete(const model::ChatRequest& req) override;
  const std::vector<model::ChatRequest>& requests() const { return requests_; }
  int calls() const { return static_cast<int>(requests_.size()); }

 private:
  std::deque<std::string> replies_;
  bool repeat_last_;
  std::string last_;
  std::vector<model::ChatRequest> requests_;
};

// Client that always fails the way an unreachable endpoint does.
class DownClient final : public model::ModelClient {
 public:
  std::string complete(const model::ChatRequest&) override;
};

// OpenAI-style chat endpoint on 127.0.0.1. Each request pops the next
// scripted (status, assistant text) pair; the last pair repeats.
class MockChatServer {
 public:
  struct Reply {
    int status = 200;
    std::string text;
  };
  explicit MockChatServer(std::vector<Reply> replies);
  ~MockChatServer();

  std::string base_url() const;
  std::vector<std::string> bodies() const;
  std::vector<std::string> auth_headers() const;
  int max_concurrent() const;
  void set_delay(std::chrono::milliseconds d);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cogweb::testing
