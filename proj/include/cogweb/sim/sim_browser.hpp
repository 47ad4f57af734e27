#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cogweb/browser/session.hpp"

namespace cogweb::sim {

using browser::Point;
using browser::Viewport;

struct SimAction {
  enum class Kind { Navigate, Toggle, SetName, ToggleChecked };
  Kind kind = Kind::Navigate;
  std::string url;                // Navigate
  std::vector<std::string> keys;  // Toggle: elements whose visibility flips
  std::string target;             // SetName: element key
  std::string name;               // SetName: new accessible name
};

struct SimElement {
  std::string key;
  std::string html;
  std::string role;  // defaults to the role inferred from html
  std::string name;  // defaults to the name inferred from html
  std::string css;   // defaults to "#key"
  Rect rect;         // page coordinates
  Rgba color;
  std::optional<Rgba> hover_color;
  bool hidden = false;
  std::string parent;
  int wrappers = 0;
  bool checked = false;
  bool checkable = false;
  std::vector<SimAction> on_click;
};

struct SimPage {
  std::string url;
  std::string title;
  Rgba background{255, 255, 255, 255};
  int load_ms = 0;
  int height = 0;
  std::vector<SimElement> elements;
};

// A static site description. JSON form:
//   {"pages": [{"url": ..., "title": ..., "elements": [{"key": ..., "html": ...,
//     "rect": [x,y,w,h], "hover_color": [r,g,b], "hidden": bool, "parent": key,
//     "wrappers": n, "on_click": [{"navigate": url} | {"toggle": [keys]} |
//     {"set_name": {"target": key, "name": text}} | {"toggle_checked": true}]}]}]}
struct SimSite {
  std::map<std::string, SimPage> pages;

  static SimSite from_json(const json& j);
  static SimSite load(const std::filesystem::path& path);
};

// Interactive-element record as reported by the page instrumentation bundle.
json instrumentation_record(const SimPage& page, const SimElement& el, const Rect& viewport_box);

class SimBrowser final : public browser::BrowserSession {
 public:
  explicit SimBrowser(SimSite site, Viewport viewport = {}, std::string session_id = "sim-1");

  const std::string& session_id() const override { return id_; }
  Viewport viewport() const override { return viewport_; }

  browser::NavigationResult navigate(std::string_view url, std::chrono::milliseconds settle_timeout) override;
  std::string current_url() override;
  Image capture_screenshot() override;
  browser::RawAXNode fetch_raw_ax() override;
  browser::InputOutcome execute_input(const browser::InputPrimitive& p) override;
  json evaluate_script(std::string_view script) override;
  std::optional<Rect> node_bounds(std::int64_t backend_id) override;
  void reset_history() override;
  void settle(std::chrono::milliseconds) override {}
  void set_viewport(Viewport v);

  // Low-level hooks, also used by the devtools test server.
  std::int64_t backend_at(Point p) const;
  void click_at(Point p);
  void hover_at(Point p);
  void wheel(int delta_y);
  bool dom_click(std::int64_t backend_id);
  // False when the node is detached.
  bool scroll_into_view(std::int64_t backend_id);
  bool focus(std::int64_t backend_id);
  void insert_text(std::string_view text);
  bool history_step(int delta);
  const std::vector<std::string>& history() const { return history_; }
  int history_index() const { return history_index_; }
  std::string outer_html(std::int64_t backend_id) const;
  bool instrumentation_installed() const { return instrumented_; }
  void set_auto_instrumentation(bool on) { auto_instrument_ = on; }
  std::size_t highlight_count() const { return highlights_.size(); }
  std::int64_t load_generation() const { return generation_; }
  std::string value_of(std::string_view key) const;
  std::string name_of(std::string_view key) const;

 private:
  struct LiveElement {
    const SimElement* def = nullptr;
    bool visible = true;
    std::string name;
    std::string value;
    bool checked = false;
  };

  void load(const std::string& url);
  int index_of_backend(std::int64_t backend_id) const;
  int index_of_key(std::string_view key) const;
  std::optional<Rect> viewport_box(int index) const;
  int hit_index(Point p) const;
  void fire_click(int index);
  int page_height() const;

  SimSite site_;
  Viewport viewport_;
  std::string id_;
  SimPage blank_;
  const SimPage* page_ = nullptr;
  std::string url_;
  std::vector<LiveElement> live_;
  std::vector<std::string> history_;
  int history_index_ = -1;
  std::int64_t generation_ = 0;
  int hovered_ = -1;
  int focused_ = -1;
  int scroll_y_ = 0;
  bool instrumented_ = false;
  bool auto_instrument_ = true;
  std::vector<std::pair<Rect, std::string>> highlights_;
};

}  // namespace cogweb::sim
