#include "cogweb/sim/sim_browser.hpp"

#include <algorithm>
#include <functional>
#include <regex>
#include <thread>

#include "cogweb/error.hpp"
#include "cogweb/observation/ax_tree.hpp"
#include "cogweb/observation/html.hpp"
#include "cogweb/observation/marker.hpp"

namespace cogweb::sim {

using browser::InputKind;
using browser::InputOutcome;
using browser::InputPrimitive;
using browser::NavigationResult;
using browser::NavigationStatus;
using browser::RawAXNode;

namespace {

Rgba color_from(const json& j, Rgba fallback) {
  if (!j.is_array() || j.size() < 3) return fallback;
  return {j[0].get<std::uint8_t>(), j[1].get<std::uint8_t>(), j[2].get<std::uint8_t>(),
          j.size() > 3 ? j[3].get<std::uint8_t>() : std::uint8_t{255}};
}

Rgba pastel(std::string_view key) {
  const auto h = derive_seed(0x5157, key);
  return {static_cast<std::uint8_t>(120 + (h & 0x7F)), static_cast<std::uint8_t>(120 + ((h >> 8) & 0x7F)),
          static_cast<std::uint8_t>(120 + ((h >> 16) & 0x7F)), 255};
}

Rgba darker(Rgba c) {
  return {static_cast<std::uint8_t>(c.r * 3 / 5), static_cast<std::uint8_t>(c.g * 3 / 5),
          static_cast<std::uint8_t>(c.b * 3 / 5), 255};
}

constexpr std::int64_t kGenerationStride = 10'000;
constexpr std::int64_t kAuxBase = 5'000;
constexpr int kHeaderHeight = 48;

}  // namespace

SimSite SimSite::from_json(const json& j) {
  SimSite site;
  for (const auto& pj : j.at("pages")) {
    SimPage page;
    page.url = pj.at("url").get<std::string>();
    page.title = pj.value("title", "");
    page.background = color_from(pj.value("background", json()), page.background);
    page.load_ms = pj.value("load_ms", 0);
    page.height = pj.value("height", 0);
    for (const auto& ej : pj.value("elements", json::array())) {
      SimElement el;
      el.key = ej.at("key").get<std::string>();
      el.html = ej.at("html").get<std::string>();
      const auto node = obs::parse_html_fragment(el.html);
      el.role = ej.contains("role") ? ej["role"].get<std::string>() : obs::role_for_element(node);
      el.name = ej.contains("name") ? ej["name"].get<std::string>() : obs::name_for_element(node);
      el.css = ej.value("css", "#" + el.key);
      const auto& r = ej.at("rect");
      el.rect = {r.at(0).get<int>(), r.at(1).get<int>(), r.at(2).get<int>(), r.at(3).get<int>()};
      el.color = color_from(ej.value("color", json()), pastel(el.key));
      if (ej.contains("hover_color")) el.hover_color = color_from(ej["hover_color"], el.color);
      el.hidden = ej.value("hidden", false);
      el.parent = ej.value("parent", "");
      el.wrappers = ej.value("wrappers", 0);
      el.checkable = el.role == "checkbox" || el.role == "radio" || el.role == "switch";
      el.checked = ej.value("checked", false);
      for (const auto& aj : ej.value("on_click", json::array())) {
        SimAction a;
        if (aj.contains("navigate")) {
          a.kind = SimAction::Kind::Navigate;
          a.url = aj["navigate"].get<std::string>();
        } else if (aj.contains("toggle")) {
          a.kind = SimAction::Kind::Toggle;
          a.keys = aj["toggle"].get<std::vector<std::string>>();
        } else if (aj.contains("set_name")) {
          a.kind = SimAction::Kind::SetName;
          a.target = aj["set_name"].at("target").get<std::string>();
          a.name = aj["set_name"].at("name").get<std::string>();
        } else if (aj.contains("toggle_checked")) {
          a.kind = SimAction::Kind::ToggleChecked;
        } else {
          throw Error(Errc::InvalidArgument, "unknown sim action on element " + el.key);
        }
        el.on_click.push_back(std::move(a));
      }
      page.elements.push_back(std::move(el));
    }
    site.pages[page.url] = std::move(page);
  }
  return site;
}

SimSite SimSite::load(const std::filesystem::path& path) { return from_json(json::parse(read_text_file(path))); }

json instrumentation_record(const SimPage& page, const SimElement& el, const Rect& viewport_box) {
  std::string allcss = "html > body";
  std::vector<std::string> chain;
  std::string parent = el.parent;
  while (!parent.empty()) {
    auto it = std::find_if(page.elements.begin(), page.elements.end(),
                           [&](const SimElement& e) { return e.key == parent; });
    if (it == page.elements.end()) break;
    chain.push_back(it->css);
    parent = it->parent;
  }
  for (auto it = chain.rbegin(); it != chain.rend(); ++it) allcss += " > " + *it;
  allcss += " > " + el.css;
  return {{"css", el.css},
          {"allcss", allcss},
          {"outer_html", el.html},
          {"bbox", {{"x", viewport_box.x}, {"y", viewport_box.y}, {"width", viewport_box.w}, {"height", viewport_box.h}}},
          {"visible", true}};
}

SimBrowser::SimBrowser(SimSite site, Viewport viewport, std::string session_id)
    : site_(std::move(site)), viewport_(viewport), id_(std::move(session_id)) {
  browser::validate_viewport(viewport_);
  blank_.url = "about:blank";
  load("about:blank");
}

void SimBrowser::load(const std::string& url) {
  ++generation_;
  url_ = url;
  auto it = site_.pages.find(url);
  if (it != site_.pages.end()) {
    page_ = &it->second;
  } else {
    blank_.url = url;
    blank_.title = url == "about:blank" ? "" : "Not Found";
    page_ = &blank_;
  }
  live_.clear();
  for (const auto& el : page_->elements) {
    live_.push_back(LiveElement{&el, !el.hidden, el.name, "", el.checked});
  }
  hovered_ = -1;
  focused_ = -1;
  scroll_y_ = 0;
  instrumented_ = false;
  highlights_.clear();
}

NavigationResult SimBrowser::navigate(std::string_view url, std::chrono::milliseconds settle_timeout) {
  const std::string target(url);
  if (history_index_ + 1 < static_cast<int>(history_.size())) history_.resize(history_index_ + 1);
  history_.push_back(target);
  history_index_ = static_cast<int>(history_.size()) - 1;
  load(target);
  NavigationResult out{NavigationStatus::Ready, url_};
  const auto load_time = std::chrono::milliseconds(page_->load_ms);
  if (load_time > settle_timeout) {
    std::this_thread::sleep_for(settle_timeout);
    out.status = NavigationStatus::Timeout;
  } else if (load_time.count() > 0) {
    std::this_thread::sleep_for(load_time);
  }
  return out;
}

std::string SimBrowser::current_url() { return url_; }

void SimBrowser::set_viewport(Viewport v) {
  browser::validate_viewport(v);
  viewport_ = v;
  wheel(0);
}

int SimBrowser::page_height() const {
  int h = std::max(page_->height, viewport_.height);
  for (const auto& el : page_->elements) h = std::max(h, el.rect.bottom());
  return h;
}

std::optional<Rect> SimBrowser::viewport_box(int index) const {
  if (index < 0 || index >= static_cast<int>(live_.size()) || !live_[index].visible) return std::nullopt;
  Rect r = live_[index].def->rect;
  r.y -= scroll_y_;
  const Rect clipped = r.intersect({0, 0, viewport_.width, viewport_.height});
  if (clipped.empty()) return std::nullopt;
  return r;
}

Image SimBrowser::capture_screenshot() {
  Image img(viewport_.width, viewport_.height, page_->background);
  if (page_ != &blank_ || url_ != "about:blank") {
    img.fill_rect({0, -scroll_y_, viewport_.width, kHeaderHeight}, pastel(url_));
  }
  for (int i = 0; i < static_cast<int>(live_.size()); ++i) {
    const auto box = viewport_box(i);
    if (!box) continue;
    const auto& el = *live_[i].def;
    const Rgba fill = (i == hovered_ && el.hover_color) ? *el.hover_color : el.color;
    img.fill_rect(*box, fill);
    obs::draw_marker_into(img, *box, {darker(fill), 1});
    if (live_[i].checked) img.fill_rect({box->x + 4, box->y + 4, 6, 6}, {20, 20, 20, 255});
    if (!live_[i].value.empty()) {
      const int width = std::min(static_cast<int>(live_[i].value.size()) * 4, std::max(box->w - 8, 0));
      img.fill_rect({box->x + 4, box->y + box->h / 2 - 1, width, 2}, {30, 30, 30, 255});
    }
  }
  for (const auto& [rect, label] : highlights_) {
    Rect r = rect;
    r.y -= scroll_y_;
    obs::draw_marker_into(img, r);
    if (!label.empty()) obs::draw_text(img, r.x + 3, r.y + 3, label, {255, 0, 0, 255}, 1);
  }
  return img;
}

RawAXNode SimBrowser::fetch_raw_ax() {
  RawAXNode root{generation_ * kGenerationStride, "RootWebArea", page_->title, "", {}, {}};
  std::int64_t aux = generation_ * kGenerationStride + kAuxBase;

  std::function<void(int, RawAXNode&)> place = [&](int i, RawAXNode& container) {
    const auto& le = live_[i];
    RawAXNode node{generation_ * kGenerationStride + i + 1, le.def->role, le.name, "", {}, {}};
    if (le.def->checkable) node.state_flags.emplace_back("checked", le.checked ? "true" : "false");
    if (!le.value.empty()) node.state_flags.emplace_back("value", le.value);
    if (i == focused_) node.state_flags.emplace_back("focused", "true");
    for (const auto& a : le.def->on_click) {
      if (a.kind != SimAction::Kind::Toggle || a.keys.empty()) continue;
      const int first = index_of_key(a.keys.front());
      node.state_flags.emplace_back("expanded", first >= 0 && live_[first].visible ? "true" : "false");
    }
    if (!le.name.empty() && (le.def->role == "button" || le.def->role == "link" || le.def->role == "menuitem")) {
      RawAXNode text{aux++, "StaticText", le.name, "", {}, {}};
      text.children.push_back(RawAXNode{aux++, "InlineTextBox", le.name, "", {}, {}});
      node.children.push_back(std::move(text));
    }
    for (int c = 0; c < static_cast<int>(live_.size()); ++c) {
      if (live_[c].visible && live_[c].def->parent == le.def->key) place(c, node);
    }
    for (int w = 0; w < le.def->wrappers; ++w) {
      RawAXNode outer{aux++, "generic", "", "", {}, {}};
      outer.children.push_back(std::move(node));
      node = std::move(outer);
    }
    container.children.push_back(std::move(node));
  };

  for (int i = 0; i < static_cast<int>(live_.size()); ++i) {
    if (!live_[i].visible) continue;
    const auto& parent = live_[i].def->parent;
    if (parent.empty() || index_of_key(parent) < 0) place(i, root);
  }
  return root;
}

int SimBrowser::index_of_backend(std::int64_t backend_id) const {
  const std::int64_t local = backend_id - generation_ * kGenerationStride - 1;
  if (local < 0 || local >= static_cast<std::int64_t>(live_.size())) return -1;
  return static_cast<int>(local);
}

int SimBrowser::index_of_key(std::string_view key) const {
  for (int i = 0; i < static_cast<int>(live_.size()); ++i) {
    if (live_[i].def->key == key) return i;
  }
  return -1;
}

int SimBrowser::hit_index(Point p) const {
  for (int i = static_cast<int>(live_.size()) - 1; i >= 0; --i) {
    const auto box = viewport_box(i);
    if (box && box->contains(p.x, p.y)) return i;
  }
  return -1;
}

std::int64_t SimBrowser::backend_at(Point p) const {
  const int i = hit_index(p);
  return i < 0 ? generation_ * kGenerationStride : generation_ * kGenerationStride + i + 1;
}

std::optional<Rect> SimBrowser::node_bounds(std::int64_t backend_id) {
  return viewport_box(index_of_backend(backend_id));
}

std::string SimBrowser::outer_html(std::int64_t backend_id) const {
  const int i = index_of_backend(backend_id);
  return i < 0 ? std::string() : live_[i].def->html;
}

std::string SimBrowser::value_of(std::string_view key) const {
  const int i = index_of_key(key);
  return i < 0 ? std::string() : live_[i].value;
}

std::string SimBrowser::name_of(std::string_view key) const {
  const int i = index_of_key(key);
  return i < 0 ? std::string() : live_[i].name;
}

void SimBrowser::fire_click(int index) {
  if (index < 0) return;
  const SimElement& el = *live_[index].def;
  if (el.role == "textbox" || el.role == "searchbox" || el.role == "combobox") focused_ = index;
  if (el.checkable) live_[index].checked = !live_[index].checked;
  for (const auto& a : el.on_click) {
    switch (a.kind) {
      case SimAction::Kind::Navigate:
        navigate(a.url, browser::kDefaultSettleTimeout);
        return;  // page replaced
      case SimAction::Kind::Toggle:
        for (const auto& k : a.keys) {
          const int t = index_of_key(k);
          if (t >= 0) live_[t].visible = !live_[t].visible;
        }
        break;
      case SimAction::Kind::SetName: {
        const int t = index_of_key(a.target);
        if (t >= 0) live_[t].name = a.name;
        break;
      }
      case SimAction::Kind::ToggleChecked:
        if (!el.checkable) live_[index].checked = !live_[index].checked;
        break;
    }
  }
}

void SimBrowser::click_at(Point p) { fire_click(hit_index(p)); }

void SimBrowser::hover_at(Point p) { hovered_ = hit_index(p); }

void SimBrowser::wheel(int delta_y) {
  scroll_y_ = std::clamp(scroll_y_ + delta_y, 0, std::max(page_height() - viewport_.height, 0));
}

bool SimBrowser::dom_click(std::int64_t backend_id) {
  const int i = index_of_backend(backend_id);
  if (i < 0 || !live_[i].visible) return false;
  fire_click(i);
  return true;
}

bool SimBrowser::scroll_into_view(std::int64_t backend_id) {
  const int i = index_of_backend(backend_id);
  if (i < 0) return false;
  if (!live_[i].visible) return true;
  const Rect r = live_[i].def->rect;
  if (r.y - scroll_y_ < 0 || r.y - scroll_y_ + r.h > viewport_.height) wheel(r.y - scroll_y_ - viewport_.height / 3);
  return true;
}

bool SimBrowser::focus(std::int64_t backend_id) {
  const int i = index_of_backend(backend_id);
  if (i < 0 || !live_[i].visible) return false;
  focused_ = i;
  return true;
}

void SimBrowser::insert_text(std::string_view text) {
  if (focused_ >= 0) live_[focused_].value += text;
}

bool SimBrowser::history_step(int delta) {
  const int idx = history_index_ + delta;
  if (idx < 0 || idx >= static_cast<int>(history_.size())) return false;
  history_index_ = idx;
  load(history_[idx]);
  return true;
}

void SimBrowser::reset_history() {
  history_ = {url_};
  history_index_ = 0;
}

InputOutcome SimBrowser::execute_input(const InputPrimitive& p) {
  browser::validate_input(p);
  auto resolve = [&](const browser::InputTarget& t) -> Point {
    if (const auto* pt = std::get_if<Point>(&t)) {
      if (!Rect{0, 0, viewport_.width, viewport_.height}.contains(pt->x, pt->y)) {
        throw Error(Errc::TargetUnresolvable, "point outside viewport");
      }
      return *pt;
    }
    if (const auto* b = std::get_if<browser::BackendId>(&t)) {
      if (!scroll_into_view(b->value)) {
        throw Error(Errc::StaleTarget, "node " + std::to_string(b->value) + " is detached");
      }
      const int i = index_of_backend(b->value);
      if (!live_[i].visible) throw Error(Errc::TargetUnresolvable, "node " + std::to_string(b->value) + " is hidden");
      const auto box = viewport_box(i);
      if (!box) throw Error(Errc::TargetUnresolvable, "node has no box");
      const auto [cx, cy] = box->center();
      return {std::clamp(cx, 0, viewport_.width - 1), std::clamp(cy, 0, viewport_.height - 1)};
    }
    return {viewport_.width / 2, viewport_.height / 2};
  };
  switch (p.kind) {
    case InputKind::Click: {
      const Point at = resolve(p.target);
      if (const auto* b = std::get_if<browser::BackendId>(&p.target); b && hit_index(at) != index_of_backend(b->value)) {
        dom_click(b->value);
      } else {
        click_at(at);
      }
      return InputOutcome::Dispatched;
    }
    case InputKind::DbClick: {
      const Point at = resolve(p.target);
      const auto gen = generation_;
      click_at(at);
      if (gen == generation_) click_at(at);
      return InputOutcome::Dispatched;
    }
    case InputKind::Hover:
      hover_at(resolve(p.target));
      return InputOutcome::Dispatched;
    case InputKind::TypeText:
      if (const auto* b = std::get_if<browser::BackendId>(&p.target)) {
        resolve(p.target);
        focus(b->value);
      } else {
        click_at(resolve(p.target));
      }
      insert_text(p.text);
      return InputOutcome::Dispatched;
    case InputKind::Scroll:
      resolve(p.target);
      wheel((*p.direction == browser::ScrollDirection::Down ? 1 : -1) * viewport_.height * 3 / 4);
      return InputOutcome::Dispatched;
    case InputKind::HistoryBack:
      return history_step(-1) ? InputOutcome::Dispatched : InputOutcome::NoOp;
    case InputKind::HistoryForward:
      return history_step(1) ? InputOutcome::Dispatched : InputOutcome::NoOp;
    case InputKind::Wait:
      std::this_thread::sleep_for(browser::kWaitDuration);
      return InputOutcome::Dispatched;
  }
  return InputOutcome::NoOp;
}

json SimBrowser::evaluate_script(std::string_view script_view) {
  const std::string script = trim(script_view);
  static const std::regex arithmetic(R"(^-?\d+(\s*[+\-]\s*\d+)*$)");
  static const std::regex term(R"(([+\-]?)\s*(\d+))");
  static const std::regex call(R"(^window\.__cogweb\.(\w+)\((.*)\)\s*;?$)");

  if (script.rfind("throw", 0) == 0) {
    std::smatch m;
    static const std::regex msg(R"re(["']([^"']*)["'])re");
    std::string text = std::regex_search(script, m, msg) ? m[1].str() : "Uncaught";
    throw Error(Errc::ScriptError, "Uncaught Error: " + text);
  }
  if (std::regex_match(script, arithmetic)) {
    long long total = 0;
    std::string compact;
    for (char c : script) {
      if (c != ' ') compact += c;
    }
    for (auto it = std::sregex_iterator(compact.begin(), compact.end(), term); it != std::sregex_iterator(); ++it) {
      const long long v = std::stoll((*it)[2].str());
      total += (*it)[1].str() == "-" ? -v : v;
    }
    return total;
  }
  if (script == "location.href") return url_;
  if (script == "document.title") return page_->title;
  if (script == "typeof window.__cogweb") return instrumented_ || auto_instrument_ ? "object" : "undefined";
  if (script.find("window.__cogweb=") != std::string::npos || script.find("window.__cogweb =") != std::string::npos) {
    instrumented_ = true;
    return nullptr;
  }
  std::smatch m;
  if (std::regex_match(script, m, call)) {
    if (!instrumented_ && !auto_instrument_) {
      throw Error(Errc::ScriptError, "TypeError: Cannot read properties of undefined (reading '" + m[1].str() + "')");
    }
    const std::string fn = m[1].str();
    const json args = json::parse("[" + m[2].str() + "]");
    auto find_css = [&](const std::string& css) -> int {
      for (int i = 0; i < static_cast<int>(live_.size()); ++i) {
        if (live_[i].def->css == css && live_[i].visible) return i;
      }
      return -1;
    };
    if (fn == "collectInteractives") {
      json out = json::array();
      for (int i = 0; i < static_cast<int>(live_.size()); ++i) {
        const auto box = viewport_box(i);
        if (!box) continue;
        const auto& el = *live_[i].def;
        if (!obs::is_interactive_role(el.role) && el.on_click.empty()) continue;
        out.push_back(instrumentation_record(*page_, el, *box));
      }
      return out;
    }
    if (fn == "highlight") {
      const int i = find_css(args.at(0).get<std::string>());
      if (i < 0) throw Error(Errc::ScriptError, "SelectorMiss: " + args.at(0).get<std::string>());
      highlights_.emplace_back(live_[i].def->rect,
                               args.size() > 1 && args[1].is_string() ? args[1].get<std::string>() : "");
      return static_cast<int>(highlights_.size());
    }
    if (fn == "clearHighlights") {
      const auto n = highlights_.size();
      highlights_.clear();
      return n;
    }
    if (fn == "computeCssPath") {
      const int i = find_css(args.at(0).get<std::string>());
      if (i < 0) throw Error(Errc::ScriptError, "Detached: " + args.at(0).get<std::string>());
      const json rec = instrumentation_record(*page_, *live_[i].def, live_[i].def->rect);
      return {{"css", rec["css"]}, {"allcss", rec["allcss"]}};
    }
    throw Error(Errc::ScriptError, "TypeError: window.__cogweb." + fn + " is not a function");
  }
  throw Error(Errc::ScriptError, "simulator cannot evaluate: " + script.substr(0, 60));
}

}  // namespace cogweb::sim
