#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "cogweb/browser/session.hpp"
#include "cogweb/error.hpp"

namespace cogweb::browser {

struct WsUrl {
  std::string host;
  std::string port;
  std::string path;
};

// Parses ws://host[:port]/path (also accepts http:// for discovery).
WsUrl parse_ws_url(std::string_view url);

// Resolves the endpoint handed to the CLI: ws URLs pass through, an http
// base URL is resolved through /json/version to the browser websocket.
std::string resolve_cdp_endpoint(std::string_view endpoint, std::chrono::milliseconds timeout);

struct CommandLogEntry {
  std::int64_t id = 0;
  std::string method;
  std::chrono::steady_clock::time_point sent;
  std::chrono::steady_clock::time_point completed;
};

// JSON command/event framing over one websocket. A background thread owns the
// socket; call() blocks the caller until the matching response arrives.
class CdpConnection {
 public:
  static std::unique_ptr<CdpConnection> open(std::string_view ws_url, std::chrono::milliseconds timeout);
  ~CdpConnection();

  CdpConnection(const CdpConnection&) = delete;
  CdpConnection& operator=(const CdpConnection&) = delete;

  // Returns the "result" member. Protocol errors raise `protocol_error`.
  json call(std::string_view method, const json& params, std::string_view session_id,
            std::chrono::milliseconds timeout);

  // Pops the first queued or incoming event accepted by `match`.
  std::optional<json> wait_event(const std::function<bool(const json&)>& match,
                                 std::chrono::steady_clock::time_point deadline);
  void discard_events();

  bool alive() const;
  std::vector<CommandLogEntry> command_log() const;

  struct Impl;

 private:
  explicit CdpConnection(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

// Raised by CdpConnection::call when the browser answers with an error object.
class ProtocolError : public Error {
 public:
  ProtocolError(int code, const std::string& message)
      : Error(Errc::ScriptError, message), protocol_code(code), protocol_message(message) {}
  int protocol_code;
  std::string protocol_message;
};

class CdpSession final : public BrowserSession {
 public:
  CdpSession(std::shared_ptr<CdpConnection> conn, std::string session_id, std::string cdp_session,
             Viewport viewport, std::chrono::milliseconds command_timeout);

  const std::string& session_id() const override { return id_; }
  Viewport viewport() const override { return viewport_; }

  NavigationResult navigate(std::string_view url, std::chrono::milliseconds settle_timeout) override;
  std::string current_url() override;
  Image capture_screenshot() override;
  RawAXNode fetch_raw_ax() override;
  InputOutcome execute_input(const InputPrimitive& p) override;
  json evaluate_script(std::string_view script) override;
  std::optional<Rect> node_bounds(std::int64_t backend_id) override;
  void reset_history() override;
  void settle(std::chrono::milliseconds cap) override;

  std::vector<CommandLogEntry> command_log() const { return conn_->command_log(); }

  void initialize();

 private:
  json send(std::string_view method, const json& params = json::object());
  Point resolve_point(const InputTarget& target, std::int64_t* backend_out);
  void dispatch_click(Point at, int click_count);
  bool history_step(int delta);

  std::shared_ptr<CdpConnection> conn_;
  std::string id_;
  std::string cdp_session_;
  Viewport viewport_;
  std::chrono::milliseconds command_timeout_;
  std::mutex mu_;
};

// Creates sessions against one devtools endpoint; session ids are unique per driver.
class CdpDriver {
 public:
  explicit CdpDriver(std::chrono::milliseconds command_timeout = std::chrono::seconds(30))
      : command_timeout_(command_timeout) {}

  std::unique_ptr<CdpSession> connect(std::string_view endpoint, Viewport viewport);

 private:
  std::chrono::milliseconds command_timeout_;
  std::atomic<std::uint64_t> next_session_{1};
};

}  // namespace cogweb::browser
