#include "cogweb/browser/cdp.hpp"

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <map>
#include <thread>
#include <unordered_set>

#include "cogweb/error.hpp"

namespace cogweb::browser {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using Clock = std::chrono::steady_clock;

void validate_viewport(const Viewport& v) {
  if (v.width <= 0 || v.height <= 0) {
    throw Error(Errc::InvalidArgument, "viewport dimensions must be positive, got " + std::to_string(v.width) +
                                           "x" + std::to_string(v.height));
  }
}

void validate_input(const InputPrimitive& p) {
  const bool has_target = !std::holds_alternative<std::monostate>(p.target);
  switch (p.kind) {
    case InputKind::TypeText:
      if (p.text.empty()) throw Error(Errc::InvalidArgument, "type_text requires payload text");
      [[fallthrough]];
    case InputKind::Click:
    case InputKind::DbClick:
    case InputKind::Hover:
      if (!has_target) throw Error(Errc::InvalidArgument, "pointer input requires a target");
      break;
    case InputKind::Scroll:
      if (!p.direction) throw Error(Errc::InvalidArgument, "scroll requires a direction");
      break;
    case InputKind::HistoryBack:
    case InputKind::HistoryForward:
    case InputKind::Wait:
      break;
  }
}

WsUrl parse_ws_url(std::string_view url) {
  std::string_view rest = url;
  std::string default_port = "80";
  for (std::string_view scheme : {"ws://", "http://"}) {
    if (rest.substr(0, scheme.size()) == scheme) {
      rest.remove_prefix(scheme.size());
      break;
    }
  }
  if (rest.size() == url.size()) throw Error(Errc::InvalidArgument, "unsupported endpoint scheme: " + std::string(url));
  WsUrl out;
  const auto slash = rest.find('/');
  std::string_view authority = rest.substr(0, slash);
  out.path = slash == std::string_view::npos ? "/" : std::string(rest.substr(slash));
  const auto colon = authority.rfind(':');
  if (colon == std::string_view::npos) {
    out.host = std::string(authority);
    out.port = default_port;
  } else {
    out.host = std::string(authority.substr(0, colon));
    out.port = std::string(authority.substr(colon + 1));
  }
  if (out.host.empty()) throw Error(Errc::InvalidArgument, "endpoint has no host: " + std::string(url));
  return out;
}

std::string resolve_cdp_endpoint(std::string_view endpoint, std::chrono::milliseconds timeout) {
  if (endpoint.substr(0, 5) == "ws://") return std::string(endpoint);
  const WsUrl u = parse_ws_url(endpoint);
  try {
    net::io_context ioc;
    beast::tcp_stream stream(ioc);
    tcp::resolver resolver(ioc);
    stream.expires_after(timeout);
    stream.connect(resolver.resolve(u.host, u.port));
    http::request<http::empty_body> req{http::verb::get, "/json/version", 11};
    req.set(http::field::host, u.host);
    http::write(stream, req);
    beast::flat_buffer buf;
    http::response<http::string_body> res;
    http::read(stream, buf, res);
    const json body = json::parse(res.body());
    return body.at("webSocketDebuggerUrl").get<std::string>();
  } catch (const std::exception& e) {
    throw Error(Errc::ConnectFailed, "endpoint discovery failed for " + std::string(endpoint) + ": " + e.what());
  }
}

struct CdpConnection::Impl {
  net::io_context ioc;
  websocket::stream<beast::tcp_stream> ws{ioc};
  std::thread io_thread;
  beast::flat_buffer read_buffer;
  std::deque<std::string> write_queue;
  bool writing = false;

  mutable std::mutex mu;
  std::condition_variable cv;
  std::map<std::int64_t, json> responses;
  std::deque<json> events;
  std::atomic<bool> alive{false};
  std::vector<CommandLogEntry> log;

  std::mutex call_mu;
  std::int64_t next_id = 1;

  void fail() {
    alive = false;
    cv.notify_all();
  }

  void start_read() {
    ws.async_read(read_buffer, [this](beast::error_code ec, std::size_t) {
      if (ec) {
        fail();
        return;
      }
      std::string text = beast::buffers_to_string(read_buffer.data());
      read_buffer.consume(read_buffer.size());
      json msg = json::parse(text, nullptr, false);
      if (!msg.is_discarded() && msg.is_object()) {
        std::lock_guard lock(mu);
        if (msg.contains("id") && msg["id"].is_number_integer()) {
          const auto id = msg["id"].get<std::int64_t>();
          responses[id] = std::move(msg);
        } else if (msg.contains("method")) {
          events.push_back(std::move(msg));
          if (events.size() > 4096) events.pop_front();
        }
      }
      cv.notify_all();
      start_read();
    });
  }

  void do_write() {
    writing = true;
    ws.async_write(net::buffer(write_queue.front()), [this](beast::error_code ec, std::size_t) {
      write_queue.pop_front();
      if (ec) {
        writing = false;
        fail();
        return;
      }
      if (!write_queue.empty()) {
        do_write();
      } else {
        writing = false;
      }
    });
  }

  void send_text(std::string text) {
    net::post(ioc, [this, text = std::move(text)]() mutable {
      write_queue.push_back(std::move(text));
      if (!writing) do_write();
    });
  }
};

CdpConnection::CdpConnection(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}

CdpConnection::~CdpConnection() {
  if (!impl_) return;
  net::post(impl_->ioc, [impl = impl_.get()] {
    beast::error_code ec;
    beast::get_lowest_layer(impl->ws).socket().shutdown(tcp::socket::shutdown_both, ec);
    beast::get_lowest_layer(impl->ws).socket().close(ec);
  });
  if (impl_->io_thread.joinable()) impl_->io_thread.join();
}

std::unique_ptr<CdpConnection> CdpConnection::open(std::string_view ws_url, std::chrono::milliseconds timeout) {
  const WsUrl u = parse_ws_url(ws_url);
  auto impl = std::make_unique<Impl>();
  beast::error_code result = net::error::would_block;
  tcp::resolver resolver(impl->ioc);
  auto& lowest = beast::get_lowest_layer(impl->ws);
  lowest.expires_after(timeout);
  Impl* raw = impl.get();
  resolver.async_resolve(u.host, u.port, [&, raw](beast::error_code ec, tcp::resolver::results_type results) {
    if (ec) {
      result = ec;
      return;
    }
    beast::get_lowest_layer(raw->ws).async_connect(results, [&, raw](beast::error_code ec2, const tcp::endpoint&) {
      if (ec2) {
        result = ec2;
        return;
      }
      beast::get_lowest_layer(raw->ws).expires_after(timeout);
      raw->ws.async_handshake(u.host + ":" + u.port, u.path, [&](beast::error_code ec3) { result = ec3; });
    });
  });
  impl->ioc.run();
  if (result) {
    throw Error(Errc::ConnectFailed, "cannot reach devtools endpoint " + std::string(ws_url) + ": " + result.message());
  }
  lowest.expires_never();
  impl->ws.read_message_max(512ull * 1024 * 1024);
  impl->alive = true;
  impl->ioc.restart();
  impl->start_read();
  impl->io_thread = std::thread([raw] { raw->ioc.run(); raw->fail(); });
  return std::unique_ptr<CdpConnection>(new CdpConnection(std::move(impl)));
}

json CdpConnection::call(std::string_view method, const json& params, std::string_view session_id,
                         std::chrono::milliseconds timeout) {
  std::lock_guard call_lock(impl_->call_mu);
  if (!impl_->alive) throw Error(Errc::DriverLost, "devtools connection closed");
  const std::int64_t id = impl_->next_id++;
  json msg = {{"id", id}, {"method", method}, {"params", params.is_null() ? json::object() : params}};
  if (!session_id.empty()) msg["sessionId"] = session_id;
  CommandLogEntry entry{id, std::string(method), Clock::now(), {}};
  impl_->send_text(msg.dump());

  std::unique_lock lock(impl_->mu);
  const auto deadline = Clock::now() + timeout;
  const bool got = impl_->cv.wait_until(lock, deadline, [&] {
    return impl_->responses.count(id) > 0 || !impl_->alive;
  });
  entry.completed = Clock::now();
  impl_->log.push_back(entry);
  auto it = impl_->responses.find(id);
  if (it == impl_->responses.end()) {
    if (!got) throw Error(Errc::DriverLost, "command timed out: " + std::string(method));
    throw Error(Errc::DriverLost, "devtools connection closed during " + std::string(method));
  }
  json response = std::move(it->second);
  impl_->responses.erase(it);
  lock.unlock();
  if (response.contains("error")) {
    const auto& err = response["error"];
    throw ProtocolError(err.value("code", 0), err.value("message", std::string("protocol error")));
  }
  return response.value("result", json::object());
}

std::optional<json> CdpConnection::wait_event(const std::function<bool(const json&)>& match,
                                              Clock::time_point deadline) {
  std::unique_lock lock(impl_->mu);
  for (;;) {
    for (auto it = impl_->events.begin(); it != impl_->events.end(); ++it) {
      if (match(*it)) {
        json ev = std::move(*it);
        impl_->events.erase(it);
        return ev;
      }
    }
    if (!impl_->alive) return std::nullopt;
    if (impl_->cv.wait_until(lock, deadline) == std::cv_status::timeout) {
      for (auto it = impl_->events.begin(); it != impl_->events.end(); ++it) {
        if (match(*it)) {
          json ev = std::move(*it);
          impl_->events.erase(it);
          return ev;
        }
      }
      return std::nullopt;
    }
  }
}

void CdpConnection::discard_events() {
  std::lock_guard lock(impl_->mu);
  impl_->events.clear();
}

bool CdpConnection::alive() const { return impl_->alive; }

std::vector<CommandLogEntry> CdpConnection::command_log() const {
  std::lock_guard lock(impl_->mu);
  return impl_->log;
}

// ---------------------------------------------------------------------------

CdpSession::CdpSession(std::shared_ptr<CdpConnection> conn, std::string session_id, std::string cdp_session,
                       Viewport viewport, std::chrono::milliseconds command_timeout)
    : conn_(std::move(conn)),
      id_(std::move(session_id)),
      cdp_session_(std::move(cdp_session)),
      viewport_(viewport),
      command_timeout_(command_timeout) {}

json CdpSession::send(std::string_view method, const json& params) {
  return conn_->call(method, params, cdp_session_, command_timeout_);
}

void CdpSession::initialize() {
  std::lock_guard lock(mu_);
  send("Page.enable");
  send("Runtime.enable");
  send("DOM.enable");
  send("Page.setLifecycleEventsEnabled", {{"enabled", true}});
  send("Emulation.setDeviceMetricsOverride", {{"width", viewport_.width},
                                              {"height", viewport_.height},
                                              {"deviceScaleFactor", 1},
                                              {"mobile", false}});
  send("Page.navigate", {{"url", "about:blank"}});
  send("Page.resetNavigationHistory");
  conn_->discard_events();
}

namespace {

bool is_event(const json& ev, std::string_view method, const std::string& session) {
  if (ev.value("method", "") != method) return false;
  if (!session.empty() && ev.value("sessionId", "") != session) return false;
  return true;
}

std::string flag_value_to_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_null()) return "";
  return v.dump();
}

}  // namespace

NavigationResult CdpSession::navigate(std::string_view url, std::chrono::milliseconds settle_timeout) {
  std::unique_lock lock(mu_);
  conn_->discard_events();
  const auto deadline = Clock::now() + settle_timeout;
  json res = send("Page.navigate", {{"url", url}});
  NavigationResult out;
  if (res.contains("loaderId")) {
    const std::string loader = res["loaderId"].get<std::string>();
    auto ev = conn_->wait_event(
        [&](const json& e) {
          if (!is_event(e, "Page.lifecycleEvent", cdp_session_)) return false;
          const auto& p = e["params"];
          return p.value("name", "") == "networkIdle" && p.value("loaderId", "") == loader;
        },
        deadline);
    out.status = ev ? NavigationStatus::Ready : NavigationStatus::Timeout;
    if (ev) conn_->discard_events();
  }
  lock.unlock();
  out.url = current_url();
  return out;
}

std::string CdpSession::current_url() {
  std::lock_guard lock(mu_);
  json hist = send("Page.getNavigationHistory");
  const auto idx = hist.value("currentIndex", 0);
  const auto& entries = hist["entries"];
  if (!entries.is_array() || idx < 0 || idx >= static_cast<int>(entries.size())) return "";
  return entries[idx].value("url", "");
}

Image CdpSession::capture_screenshot() {
  std::lock_guard lock(mu_);
  json res;
  try {
    res = send("Page.captureScreenshot",
               {{"format", "png"}, {"fromSurface", true}, {"captureBeyondViewport", false}});
  } catch (const ProtocolError& e) {
    throw Error(Errc::CaptureFailed, e.protocol_message);
  }
  Image img;
  try {
    img = decode_png(base64_decode(res.at("data").get<std::string>()));
  } catch (const std::exception& e) {
    throw Error(Errc::CaptureFailed, std::string("undecodable screenshot: ") + e.what());
  }
  if (img.width() != viewport_.width || img.height() != viewport_.height) {
    throw Error(Errc::CaptureFailed, "screenshot is " + std::to_string(img.width()) + "x" +
                                         std::to_string(img.height()) + ", viewport is " +
                                         std::to_string(viewport_.width) + "x" + std::to_string(viewport_.height));
  }
  return img;
}

RawAXNode CdpSession::fetch_raw_ax() {
  std::lock_guard lock(mu_);
  json res;
  try {
    res = send("Accessibility.getFullAXTree");
  } catch (const ProtocolError& e) {
    throw Error(Errc::SnapshotFailed, e.protocol_message);
  }
  const auto& nodes = res["nodes"];
  if (!nodes.is_array() || nodes.empty()) return RawAXNode{0, "RootWebArea", "", "", {}, {}};

  std::map<std::string, const json*> by_id;
  for (const auto& n : nodes) by_id[n.value("nodeId", "")] = &n;
  const json* root = &nodes[0];
  for (const auto& n : nodes) {
    if (!n.contains("parentId")) {
      root = &n;
      break;
    }
  }
  std::unordered_set<std::string> visited;
  std::function<RawAXNode(const json&)> build = [&](const json& n) {
    RawAXNode out;
    visited.insert(n.value("nodeId", ""));
    out.backend_id = n.value("backendDOMNodeId", std::int64_t{0});
    const bool ignored = n.value("ignored", false);
    out.role = ignored ? "none" : flag_value_to_string(n.contains("role") ? n["role"].value("value", json()) : json());
    if (n.contains("name")) out.name = flag_value_to_string(n["name"].value("value", json()));
    if (n.contains("description")) out.description = flag_value_to_string(n["description"].value("value", json()));
    if (n.contains("properties")) {
      for (const auto& p : n["properties"]) {
        out.state_flags.emplace_back(p.value("name", ""), flag_value_to_string(p["value"].value("value", json())));
      }
    }
    if (n.contains("childIds")) {
      for (const auto& cid : n["childIds"]) {
        const auto key = cid.get<std::string>();
        auto it = by_id.find(key);
        if (it == by_id.end() || visited.count(key)) continue;
        out.children.push_back(build(*it->second));
      }
    }
    return out;
  };
  return build(*root);
}

std::optional<Rect> CdpSession::node_bounds(std::int64_t backend_id) {
  std::lock_guard lock(mu_);
  json res;
  try {
    res = send("DOM.getContentQuads", {{"backendNodeId", backend_id}});
  } catch (const ProtocolError&) {
    return std::nullopt;
  }
  const auto& quads = res["quads"];
  if (!quads.is_array() || quads.empty() || quads[0].size() < 8) return std::nullopt;
  double minx = 1e18, miny = 1e18, maxx = -1e18, maxy = -1e18;
  for (int i = 0; i < 8; i += 2) {
    minx = std::min(minx, quads[0][i].get<double>());
    maxx = std::max(maxx, quads[0][i].get<double>());
    miny = std::min(miny, quads[0][i + 1].get<double>());
    maxy = std::max(maxy, quads[0][i + 1].get<double>());
  }
  Rect r{static_cast<int>(minx), static_cast<int>(miny), static_cast<int>(maxx - minx + 0.5),
         static_cast<int>(maxy - miny + 0.5)};
  if (r.empty()) return std::nullopt;
  return r;
}

Point CdpSession::resolve_point(const InputTarget& target, std::int64_t* backend_out) {
  if (const auto* p = std::get_if<Point>(&target)) {
    if (!Rect{0, 0, viewport_.width, viewport_.height}.contains(p->x, p->y)) {
      throw Error(Errc::TargetUnresolvable, "point outside viewport");
    }
    return *p;
  }
  if (const auto* b = std::get_if<BackendId>(&target)) {
    if (backend_out) *backend_out = b->value;
    try {
      send("DOM.scrollIntoViewIfNeeded", {{"backendNodeId", b->value}});
    } catch (const ProtocolError& e) {
      throw Error(Errc::StaleTarget, "node " + std::to_string(b->value) + ": " + e.protocol_message);
    }
    json res;
    try {
      res = send("DOM.getContentQuads", {{"backendNodeId", b->value}});
    } catch (const ProtocolError& e) {
      throw Error(Errc::StaleTarget, "node " + std::to_string(b->value) + ": " + e.protocol_message);
    }
    const auto& quads = res["quads"];
    if (!quads.is_array() || quads.empty()) {
      throw Error(Errc::TargetUnresolvable, "node " + std::to_string(b->value) + " has no layout box");
    }
    double sx = 0, sy = 0;
    for (int i = 0; i < 8; i += 2) {
      sx += quads[0][i].get<double>();
      sy += quads[0][i + 1].get<double>();
    }
    Point c{static_cast<int>(sx / 4), static_cast<int>(sy / 4)};
    c.x = std::clamp(c.x, 0, viewport_.width - 1);
    c.y = std::clamp(c.y, 0, viewport_.height - 1);
    return c;
  }
  return {viewport_.width / 2, viewport_.height / 2};
}

void CdpSession::dispatch_click(Point at, int click_count) {
  send("Input.dispatchMouseEvent", {{"type", "mouseMoved"}, {"x", at.x}, {"y", at.y}});
  send("Input.dispatchMouseEvent",
       {{"type", "mousePressed"}, {"x", at.x}, {"y", at.y}, {"button", "left"}, {"clickCount", click_count}});
  send("Input.dispatchMouseEvent",
       {{"type", "mouseReleased"}, {"x", at.x}, {"y", at.y}, {"button", "left"}, {"clickCount", click_count}});
}

bool CdpSession::history_step(int delta) {
  json hist = send("Page.getNavigationHistory");
  const int idx = hist.value("currentIndex", 0) + delta;
  const auto& entries = hist["entries"];
  if (!entries.is_array() || idx < 0 || idx >= static_cast<int>(entries.size())) return false;
  send("Page.navigateToHistoryEntry", {{"entryId", entries[idx].value("id", 0)}});
  return true;
}

InputOutcome CdpSession::execute_input(const InputPrimitive& p) {
  validate_input(p);
  std::unique_lock lock(mu_);
  conn_->discard_events();
  bool may_navigate = false;
  switch (p.kind) {
    case InputKind::Click:
    case InputKind::DbClick: {
      std::int64_t backend = 0;
      const Point at = resolve_point(p.target, &backend);
      bool occluded = false;
      std::string object_id;
      if (backend != 0) {
        object_id = send("DOM.resolveNode", {{"backendNodeId", backend}})["object"].value("objectId", "");
        json hit = send("Runtime.callFunctionOn",
                        {{"objectId", object_id},
                         {"functionDeclaration",
                          "function(x,y){const h=document.elementFromPoint(x,y);return h===this||this.contains(h);}"},
                         {"arguments", json::array({{{"value", at.x}}, {{"value", at.y}}})},
                         {"returnByValue", true}});
        occluded = !hit["result"].value("value", false);
      }
      if (occluded) {
        const int times = p.kind == InputKind::DbClick ? 2 : 1;
        for (int i = 0; i < times; ++i) {
          send("Runtime.callFunctionOn", {{"objectId", object_id}, {"functionDeclaration", "function(){this.click();}"}});
        }
      } else {
        dispatch_click(at, 1);
        if (p.kind == InputKind::DbClick) dispatch_click(at, 2);
      }
      may_navigate = true;
      break;
    }
    case InputKind::Hover: {
      const Point at = resolve_point(p.target, nullptr);
      send("Input.dispatchMouseEvent", {{"type", "mouseMoved"}, {"x", at.x}, {"y", at.y}});
      break;
    }
    case InputKind::TypeText: {
      if (const auto* b = std::get_if<BackendId>(&p.target)) {
        try {
          send("DOM.focus", {{"backendNodeId", b->value}});
        } catch (const ProtocolError& e) {
          throw Error(Errc::StaleTarget, "node " + std::to_string(b->value) + ": " + e.protocol_message);
        }
      } else {
        dispatch_click(resolve_point(p.target, nullptr), 1);
      }
      send("Input.insertText", {{"text", p.text}});
      break;
    }
    case InputKind::Scroll: {
      const Point at = resolve_point(p.target, nullptr);
      const int dy = (*p.direction == ScrollDirection::Down ? 1 : -1) * viewport_.height * 3 / 4;
      send("Input.dispatchMouseEvent",
           {{"type", "mouseWheel"}, {"x", at.x}, {"y", at.y}, {"deltaX", 0}, {"deltaY", dy}});
      break;
    }
    case InputKind::HistoryBack:
    case InputKind::HistoryForward:
      if (!history_step(p.kind == InputKind::HistoryBack ? -1 : 1)) return InputOutcome::NoOp;
      may_navigate = true;
      break;
    case InputKind::Wait:
      lock.unlock();
      std::this_thread::sleep_for(kWaitDuration);
      return InputOutcome::Dispatched;
  }
  lock.unlock();
  if (may_navigate) settle(kDefaultSettleTimeout);
  return InputOutcome::Dispatched;
}

void CdpSession::settle(std::chrono::milliseconds cap) {
  const auto quiet = std::min(cap, std::chrono::milliseconds(300));
  auto started = conn_->wait_event(
      [&](const json& e) {
        return is_event(e, "Page.frameStartedLoading", cdp_session_) ||
               (is_event(e, "Page.lifecycleEvent", cdp_session_) && e["params"].value("name", "") == "init");
      },
      Clock::now() + quiet);
  if (!started) return;
  const auto idle = conn_->wait_event(
      [&](const json& e) {
        return is_event(e, "Page.lifecycleEvent", cdp_session_) && e["params"].value("name", "") == "networkIdle";
      },
      Clock::now() + cap);
  if (!idle) {
    log_event("debug", "page did not reach network idle", {{"cap_ms", cap.count()}});
    return;
  }
  // The rest of this load's lifecycle must not look like a new load later.
  conn_->discard_events();
}

json CdpSession::evaluate_script(std::string_view script) {
  std::lock_guard lock(mu_);
  json res = send("Runtime.evaluate", {{"expression", script}, {"returnByValue", true}, {"awaitPromise", true}});
  if (res.contains("exceptionDetails")) {
    const auto& d = res["exceptionDetails"];
    std::string message = d.value("text", "script error");
    if (d.contains("exception") && d["exception"].contains("description")) {
      message = d["exception"]["description"].get<std::string>();
    }
    throw Error(Errc::ScriptError, message);
  }
  return res["result"].value("value", json());
}

void CdpSession::reset_history() {
  std::lock_guard lock(mu_);
  send("Page.resetNavigationHistory");
}

std::unique_ptr<CdpSession> CdpDriver::connect(std::string_view endpoint, Viewport viewport) {
  validate_viewport(viewport);
  const std::string ws_url = resolve_cdp_endpoint(endpoint, command_timeout_);
  std::shared_ptr<CdpConnection> conn = CdpConnection::open(ws_url, command_timeout_);
  std::string cdp_session;
  if (parse_ws_url(ws_url).path.rfind("/devtools/browser", 0) == 0) {
    try {
      const json target = conn->call("Target.createTarget", {{"url", "about:blank"}}, "", command_timeout_);
      const json attached = conn->call("Target.attachToTarget",
                                       {{"targetId", target.at("targetId")}, {"flatten", true}}, "", command_timeout_);
      cdp_session = attached.at("sessionId").get<std::string>();
    } catch (const ProtocolError& e) {
      throw Error(Errc::ConnectFailed, "target attach rejected: " + e.protocol_message);
    }
  }
  auto session = std::make_unique<CdpSession>(conn, "cdp-" + std::to_string(next_session_++), cdp_session, viewport,
                                              command_timeout_);
  try {
    session->initialize();
  } catch (const ProtocolError& e) {
    throw Error(Errc::ConnectFailed, "session setup rejected: " + e.protocol_message);
  }
  return session;
}

}  // namespace cogweb::browser
