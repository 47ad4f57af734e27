#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "cogweb/image.hpp"
#include "cogweb/util.hpp"

namespace cogweb::browser {

inline constexpr std::chrono::milliseconds kDefaultSettleTimeout{10'000};
inline constexpr std::chrono::milliseconds kWaitDuration{1'000};

struct Viewport {
  int width = 1280;
  int height = 720;
  friend bool operator==(const Viewport&, const Viewport&) = default;
};

// Throws InvalidArgument unless both dimensions are positive.
void validate_viewport(const Viewport& v);

struct RawAXNode {
  std::int64_t backend_id = 0;
  std::string role;
  std::string name;
  std::string description;
  std::vector<std::pair<std::string, std::string>> state_flags;
  std::vector<RawAXNode> children;
};

struct Point {
  int x = 0;
  int y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

struct BackendId {
  std::int64_t value = 0;
  friend bool operator==(const BackendId&, const BackendId&) = default;
};

struct WindowTarget {
  friend bool operator==(const WindowTarget&, const WindowTarget&) = default;
};

using InputTarget = std::variant<std::monostate, Point, BackendId, WindowTarget>;

enum class InputKind { Click, DbClick, TypeText, Scroll, HistoryBack, HistoryForward, Wait, Hover };
enum class ScrollDirection { Up, Down };

struct InputPrimitive {
  InputKind kind = InputKind::Wait;
  InputTarget target;
  std::string text;
  std::optional<ScrollDirection> direction;

  static InputPrimitive click(InputTarget t) { return {InputKind::Click, t, {}, {}}; }
  static InputPrimitive dbclick(InputTarget t) { return {InputKind::DbClick, t, {}, {}}; }
  static InputPrimitive hover(InputTarget t) { return {InputKind::Hover, t, {}, {}}; }
  static InputPrimitive type_text(InputTarget t, std::string s) {
    return {InputKind::TypeText, t, std::move(s), {}};
  }
  static InputPrimitive scroll(InputTarget t, ScrollDirection d) { return {InputKind::Scroll, t, {}, d}; }
  static InputPrimitive history_back() { return {InputKind::HistoryBack, WindowTarget{}, {}, {}}; }
  static InputPrimitive history_forward() { return {InputKind::HistoryForward, WindowTarget{}, {}, {}}; }
  static InputPrimitive wait() { return {InputKind::Wait, WindowTarget{}, {}, {}}; }
};

// Throws InvalidArgument on a malformed primitive (type_text without text,
// scroll without a direction, pointer kinds without a target).
void validate_input(const InputPrimitive& p);

enum class InputOutcome { Dispatched, NoOp };
enum class NavigationStatus { Ready, Timeout };

struct NavigationResult {
  NavigationStatus status = NavigationStatus::Ready;
  std::string url;
};

// One page the rest of the system drives. Implementations: CdpSession (live
// browser over the devtools wire) and sim::SimBrowser (in-process site model).
//
// A session is owned by one worker at a time; implementations serialize
// their own commands but callers must not share a session concurrently.
class BrowserSession {
 public:
  virtual ~BrowserSession() = default;

  virtual const std::string& session_id() const = 0;
  virtual Viewport viewport() const = 0;

  // A Timeout status is a signal; the page stays usable.
  virtual NavigationResult navigate(std::string_view url,
                                    std::chrono::milliseconds settle_timeout = kDefaultSettleTimeout) = 0;
  virtual std::string current_url() = 0;
  virtual Image capture_screenshot() = 0;
  virtual RawAXNode fetch_raw_ax() = 0;
  virtual InputOutcome execute_input(const InputPrimitive& p) = 0;
  virtual json evaluate_script(std::string_view script) = 0;

  // Viewport-space box of a node, or nullopt when it has no layout.
  virtual std::optional<Rect> node_bounds(std::int64_t backend_id) = 0;
  // Drops back/forward entries; used for episode restarts.
  virtual void reset_history() = 0;
  // Blocks until an input-triggered load settles, at most `cap`.
  virtual void settle(std::chrono::milliseconds cap) = 0;
};

}  // namespace cogweb::browser
