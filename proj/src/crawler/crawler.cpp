#include "cogweb/crawler/crawler.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>
#include <set>

#include "cogweb/error.hpp"
#include "cogweb/observation/html.hpp"
#include "cogweb/observation/marker.hpp"

namespace cogweb::crawl {

namespace fs = std::filesystem;
using browser::InputPrimitive;
using browser::Point;

namespace {

std::vector<AXTriple> triples(const obs::AXTree& tree) {
  std::vector<AXTriple> out;
  std::vector<std::string> stack;
  for (const auto& n : tree.nodes) {
    stack.resize(static_cast<std::size_t>(std::max(n.depth, 0)));
    std::string path;
    for (std::size_t i = 1; i < stack.size(); ++i) {
      if (!path.empty()) path += " > ";
      path += stack[i];
    }
    out.push_back({n.role, n.name, path});
    stack.push_back(n.role + " '" + n.name + "'");
  }
  return out;
}

std::vector<AXTriple> minus(const std::vector<AXTriple>& a, const std::vector<AXTriple>& b) {
  std::map<AXTriple, int> counts;
  for (const auto& t : b) ++counts[t];
  std::vector<AXTriple> out;
  for (const auto& t : a) {
    auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
    } else {
      out.push_back(t);
    }
  }
  return out;
}

std::string text_hash(std::string_view s) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(derive_seed(0, s)));
  return buf;
}

double iou(const Rect& a, const Rect& b) {
  const Rect i = a.intersect(b);
  if (i.empty()) return 0;
  const double inter = double(i.w) * i.h;
  return inter / (double(a.w) * a.h + double(b.w) * b.h - inter);
}

json triple_json(const AXTriple& t) { return {{"role", t.role}, {"name", t.name}, {"parent_path", t.parent_path}}; }

std::vector<AXTriple> triples_from_json(const json& j) {
  std::vector<AXTriple> out;
  for (const auto& t : j) out.push_back({t.at("role"), t.at("name"), t.at("parent_path")});
  return out;
}

}  // namespace

AXDiff diff_ax(const obs::AXTree& before, const obs::AXTree& after) {
  const auto b = triples(before);
  const auto a = triples(after);
  return {minus(a, b), minus(b, a), false};
}

json to_json(const AXDiff& d) {
  json added = json::array(), removed = json::array();
  for (const auto& t : d.added) added.push_back(triple_json(t));
  for (const auto& t : d.removed) removed.push_back(triple_json(t));
  return {{"added", added}, {"removed", removed}, {"url_changed", d.url_changed}};
}

AXDiff ax_diff_from_json(const json& j) {
  return {triples_from_json(j.at("added")), triples_from_json(j.at("removed")), j.value("url_changed", false)};
}

std::string element_signature(const obs::ElementMeta& m) {
  std::string tail;
  const std::string& path = m.allcss.empty() ? m.css : m.allcss;
  if (path.empty()) {
    tail = "@" + std::to_string(m.location.x) + "," + std::to_string(m.location.y);
  } else {
    const auto last = path.rfind(" > ");
    const auto prev = last == std::string::npos ? std::string::npos : path.rfind(" > ", last == 0 ? 0 : last - 1);
    tail = prev == std::string::npos ? path : path.substr(prev + 3);
  }
  return m.role + "\x1f" + m.name + "\x1f" + tail;
}

std::vector<Candidate> discover_elements(browser::BrowserSession& session, Instrumentation* instrumentation,
                                         const obs::AXTree& ax) {
  const auto vp = session.viewport();
  const Rect view{0, 0, vp.width, vp.height};
  std::vector<InPageElementRecord> recs;
  if (instrumentation) {
    try {
      if (instrumentation->ensure_installed()) recs = instrumentation->collect_interactives();
    } catch (const Error& e) {
      log_event("warn", "element discovery fell back to the AX tree", {{"error", e.what()}});
    }
  }
  std::vector<bool> used(recs.size(), false);
  std::vector<Candidate> out;
  auto push = [&](obs::ElementMeta meta) {
    const Rect clip = meta.location.intersect(view);
    if (clip.empty()) return;
    const auto [cx, cy] = clip.center();
    out.push_back({std::move(meta), Point{cx, cy}});
  };
  for (const auto& n : ax.nodes) {
    if (n.depth == 0 || !n.bbox || !obs::is_interactive_role(n.role)) continue;
    obs::ElementMeta meta;
    meta.location = *n.bbox;
    meta.role = n.role;
    meta.name = n.name;
    int best = -1;
    double best_iou = 0.5;
    for (std::size_t i = 0; i < recs.size(); ++i) {
      const double v = used[i] ? 0 : iou(recs[i].bbox, *n.bbox);
      if (v >= best_iou) {
        best_iou = v;
        best = static_cast<int>(i);
      }
    }
    if (best >= 0) {
      used[best] = true;
      meta.css = recs[best].css;
      meta.allcss = recs[best].allcss;
      meta.outer_html = recs[best].outer_html;
    }
    push(std::move(meta));
  }
  for (std::size_t i = 0; i < recs.size(); ++i) {
    if (used[i]) continue;
    obs::ElementMeta meta;
    meta.css = recs[i].css;
    meta.allcss = recs[i].allcss;
    meta.outer_html = recs[i].outer_html;
    meta.location = recs[i].bbox;
    try {
      const auto node = obs::parse_html_fragment(meta.outer_html);
      meta.role = obs::role_for_element(node);
      meta.name = obs::name_for_element(node);
    } catch (const Error&) {
      meta.role = "generic";
    }
    push(std::move(meta));
  }
  return out;
}

InteractionRecord capture_interaction_states(browser::BrowserSession& session, const Candidate& element,
                                             Instrumentation* instrumentation, const CrawlOptions& options) {
  const auto vp = session.viewport();
  const Rect view{0, 0, vp.width, vp.height};
  InteractionRecord rec;
  rec.element = element.meta;
  rec.pre_url = session.current_url();

  session.execute_input(InputPrimitive::hover(Point{vp.width - 1, vp.height - 1}));
  rec.pre_ax = obs::normalize_ax(session.fetch_raw_ax());
  const std::string pre_text = obs::serialize_ax(rec.pre_ax);
  const bool present = std::any_of(rec.pre_ax.nodes.begin(), rec.pre_ax.nodes.end(), [&](const obs::AXNode& n) {
    return n.role == element.meta.role && n.name == element.meta.name;
  });
  if (!present) {
    throw Error(Errc::StaleTarget, element.meta.role + " '" + element.meta.name + "' is no longer on the page");
  }
  rec.shots.base = session.capture_screenshot();
  rec.shots.standalone = rec.shots.base.crop(element.meta.location.inflate(options.crop_padding).intersect(view));

  if (options.live_markers && instrumentation && !element.meta.css.empty()) {
    instrumentation->highlight(element.meta.css);
    rec.shots.base_rect = session.capture_screenshot();
    instrumentation->clear_highlights();
    if (session.capture_screenshot() != rec.shots.base) {
      log_event("warn", "page differs after clearing the marker", {{"css", element.meta.css}});
    }
  } else {
    rec.shots.base_rect = obs::draw_marker(rec.shots.base, element.meta.location);
  }

  if (obs::serialize_ax(obs::normalize_ax(session.fetch_raw_ax())) != pre_text) {
    throw Error(Errc::StaleTarget, "page changed before probing " + element.meta.role + " '" + element.meta.name + "'");
  }
  session.execute_input(InputPrimitive::hover(element.click_point));
  rec.shots.hover = session.capture_screenshot();

  session.execute_input(InputPrimitive::click(element.click_point));
  session.settle(options.settle_timeout);
  rec.shots.click = session.capture_screenshot();
  rec.post_ax = obs::normalize_ax(session.fetch_raw_ax());
  rec.post_url = session.current_url();
  rec.diff = diff_ax(rec.pre_ax, rec.post_ax);
  rec.diff.url_changed = rec.post_url != rec.pre_url;
  return rec;
}

std::string site_name(const std::string& url) {
  std::string host = url;
  if (const auto p = host.find("://"); p != std::string::npos) host = host.substr(p + 3);
  host = host.substr(0, host.find('/'));
  if (host.empty()) host = "site";
  for (char& c : host) {
    if (!std::isalnum(static_cast<unsigned char>(c))) c = '_';
  }
  return host;
}

namespace {

struct State {
  std::string url;
  std::vector<Point> clicks;
};

class Crawler {
 public:
  Crawler(browser::BrowserSession& s, const CrawlOptions& o, Instrumentation* i, CrawlStats& st)
      : session_(s), options_(o), instr_(i), stats_(st) {}

  CrawlStore run(const std::string& start_url) {
    if (options_.max_layers < 1 || options_.max_layers > 6) {
      throw Error(Errc::InvalidArgument, "max_layers must be in [1, 6]");
    }
    store_.site = site_name(start_url);
    std::vector<State> frontier{{start_url, {}}};
    bool first = true;
    for (int layer = 1; layer <= options_.max_layers && !frontier.empty(); ++layer) {
      std::vector<State> next;
      for (const auto& state : frontier) {
        if (full()) break;
        crawl_state(state, layer, first, next);
        first = false;
      }
      frontier = std::move(next);
    }
    return std::move(store_);
  }

 private:
  bool full() const { return static_cast<int>(store_.records.size()) >= options_.budget.max_records; }

  bool enter(const State& s) {
    const auto nav = session_.navigate(s.url, options_.settle_timeout);
    if (nav.status == browser::NavigationStatus::Timeout) {
      log_event("warn", "navigation did not settle", {{"url", s.url}});
    }
    for (const auto& p : s.clicks) {
      session_.execute_input(InputPrimitive::click(p));
      session_.settle(options_.settle_timeout);
    }
    return true;
  }

  std::string current_text() { return obs::serialize_ax(obs::normalize_ax(session_.fetch_raw_ax())); }

  void crawl_state(const State& state, int layer, bool first, std::vector<State>& next) {
    obs::Observation pre;
    try {
      enter(state);
      pre = obs::compose_observation(session_, 1, true);
    } catch (const Error& e) {
      ++stats_.failures;
      log_event("warn", "could not enter page state", {{"url", state.url}, {"error", e.what()}});
      return;
    }
    if (first) seen_states_.insert(pre.url + "\n" + text_hash(pre.ax_text));
    store_.pages.push_back({pre.url, layer, text_hash(pre.ax_text), pre.screenshot.content_hash()});

    const auto candidates = discover_elements(session_, instr_, pre.ax);
    int probed_here = 0;
    for (const auto& cand : candidates) {
      if (probed_here >= options_.budget.max_elements_per_page || full()) break;
      const std::string sig = element_signature(cand.meta);
      if (!probed_.insert(pre.url + "\n" + sig).second) {
        ++stats_.duplicates;
        continue;
      }
      try {
        if (session_.current_url() != pre.url || current_text() != pre.ax_text) {
          enter(state);
          if (current_text() != pre.ax_text) throw Error(Errc::StaleTarget, "page state could not be restored");
        }
        auto rec = capture_interaction_states(session_, cand, instr_, options_);
        ++probed_here;
        ++stats_.probed;
        rec.layer = layer;
        const std::string post_text = obs::serialize_ax(rec.post_ax);
        if (layer < options_.max_layers && (rec.diff.url_changed || !rec.diff.empty())) {
          State child{rec.post_url, {}};
          if (!rec.diff.url_changed) {
            child = {state.url, state.clicks};
            child.clicks.push_back(cand.click_point);
            if (static_cast<int>(child.clicks.size()) > options_.max_replay_clicks) child = {rec.post_url, {}};
          }
          if (seen_states_.insert(rec.post_url + "\n" + text_hash(post_text)).second) next.push_back(child);
        }
        const bool changed = rec.diff.url_changed;
        if (!posted_.insert(rec.post_url + "\n" + sig).second) {
          ++stats_.duplicates;
        } else {
          char id[16];
          std::snprintf(id, sizeof id, "%06zu", store_.records.size() + 1);
          rec.id = id;
          store_.records.push_back(std::move(rec));
        }
        if (changed) session_.execute_input(InputPrimitive::history_back());
      } catch (const Error& e) {
        ++stats_.failures;
        log_event("warn", "element probe failed",
                  {{"url", pre.url}, {"role", cand.meta.role}, {"name", cand.meta.name}, {"error", e.what()}});
        if (e.code() == Errc::DriverLost) throw;
      }
    }
  }

  browser::BrowserSession& session_;
  const CrawlOptions& options_;
  Instrumentation* instr_;
  CrawlStats& stats_;
  CrawlStore store_;
  std::set<std::string> seen_states_;
  std::set<std::string> probed_;
  std::set<std::string> posted_;
};

}  // namespace

CrawlStore crawl_site(browser::BrowserSession& session, const std::string& start_url, const CrawlOptions& options,
                      Instrumentation* instrumentation, CrawlStats* stats) {
  CrawlStats local;
  return Crawler(session, options, instrumentation, stats ? *stats : local).run(start_url);
}

void CrawlStore::save(const fs::path& root) const {
  const fs::path dir = root / site;
  fs::create_directories(dir);
  for (const auto& r : records) {
    const fs::path rd = dir / std::to_string(r.layer) / r.id;
    fs::create_directories(rd);
    write_png(r.shots.standalone, rd / "standalone.png");
    write_png(r.shots.base, rd / "base.png");
    write_png(r.shots.base_rect, rd / "base_rect.png");
    write_png(r.shots.hover, rd / "hover.png");
    write_png(r.shots.click, rd / "click.png");
    const json meta = {{"id", r.id},
                       {"element", obs::to_json(r.element)},
                       {"layer", r.layer},
                       {"pre_url", r.pre_url},
                       {"post_url", r.post_url}};
    write_text_file(rd / "meta.json", meta.dump(2) + "\n");
    write_text_file(rd / "pre_ax.txt", obs::serialize_ax(r.pre_ax));
    write_text_file(rd / "post_ax.txt", obs::serialize_ax(r.post_ax));
    write_text_file(rd / "diff.json", to_json(r.diff).dump(2) + "\n");
  }
  json pj = json::array();
  for (const auto& p : pages) {
    pj.push_back({{"url", p.url}, {"layer", p.layer}, {"ax_hash", p.ax_hash}, {"screenshot_hash", p.screenshot_hash}});
  }
  write_text_file(dir / "pages.json", pj.dump(2) + "\n");
}

CrawlStore CrawlStore::load(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(Errc::Io, "no crawl store at " + dir.string());
  CrawlStore store;
  store.site = dir.filename().string();
  for (const auto& layer_dir : fs::directory_iterator(dir)) {
    if (!layer_dir.is_directory()) continue;
    for (const auto& rd : fs::directory_iterator(layer_dir.path())) {
      if (!fs::exists(rd.path() / "meta.json")) continue;
      const json meta = json::parse(read_text_file(rd.path() / "meta.json"));
      InteractionRecord r;
      r.id = meta.at("id");
      r.element = obs::element_meta_from_json(meta.at("element"));
      r.layer = meta.at("layer");
      r.pre_url = meta.at("pre_url");
      r.post_url = meta.at("post_url");
      r.shots.standalone = read_png(rd.path() / "standalone.png");
      r.shots.base = read_png(rd.path() / "base.png");
      r.shots.base_rect = read_png(rd.path() / "base_rect.png");
      r.shots.hover = read_png(rd.path() / "hover.png");
      r.shots.click = read_png(rd.path() / "click.png");
      r.pre_ax = obs::parse_ax_text(read_text_file(rd.path() / "pre_ax.txt"));
      r.post_ax = obs::parse_ax_text(read_text_file(rd.path() / "post_ax.txt"));
      r.diff = ax_diff_from_json(json::parse(read_text_file(rd.path() / "diff.json")));
      store.records.push_back(std::move(r));
    }
  }
  std::sort(store.records.begin(), store.records.end(),
            [](const InteractionRecord& a, const InteractionRecord& b) { return a.id < b.id; });
  if (fs::exists(dir / "pages.json")) {
    for (const auto& p : json::parse(read_text_file(dir / "pages.json"))) {
      store.pages.push_back({p.at("url"), p.at("layer"), p.at("ax_hash"), p.at("screenshot_hash")});
    }
  }
  return store;
}

}  // namespace cogweb::crawl
