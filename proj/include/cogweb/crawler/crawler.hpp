#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "cogweb/browser/session.hpp"
#include "cogweb/crawler/instrumentation.hpp"
#include "cogweb/observation/ax_tree.hpp"

namespace cogweb::crawl {

struct AXTriple {
  std::string role;
  std::string name;
  std::string parent_path;

  friend bool operator==(const AXTriple&, const AXTriple&) = default;
  friend auto operator<=>(const AXTriple&, const AXTriple&) = default;
};

struct AXDiff {
  std::vector<AXTriple> added;
  std::vector<AXTriple> removed;
  bool url_changed = false;

  bool empty() const { return added.empty() && removed.empty(); }
};

// Multiset difference over (role, name, parent path). Added entries follow
// the document order of `after`, removed entries that of `before`.
// url_changed is left false; the caller knows the URLs.
AXDiff diff_ax(const obs::AXTree& before, const obs::AXTree& after);

json to_json(const AXDiff& d);
AXDiff ax_diff_from_json(const json& j);

struct ShotSet {
  Image standalone;
  Image base;
  Image base_rect;
  Image hover;
  Image click;
};

struct InteractionRecord {
  std::string id;
  obs::ElementMeta element;
  ShotSet shots;
  obs::AXTree pre_ax;
  obs::AXTree post_ax;
  AXDiff diff;
  int layer = 1;
  std::string pre_url;
  std::string post_url;
};

struct PageEntry {
  std::string url;
  int layer = 1;
  std::string ax_hash;
  std::string screenshot_hash;
};

struct CrawlStore {
  std::string site;
  std::vector<InteractionRecord> records;
  std::vector<PageEntry> pages;

  // Writes <root>/<site>/<layer>/<record-id>/... and <root>/<site>/pages.json.
  void save(const std::filesystem::path& root) const;
  // `dir` is the site directory (<root>/<site>).
  static CrawlStore load(const std::filesystem::path& dir);
};

struct Budget {
  int max_elements_per_page = 40;
  int max_records = 500;
};

struct CrawlOptions {
  int max_layers = 2;
  Budget budget;
  int crop_padding = 8;
  // Draw base_rect with the in-page overlay instead of in image space.
  bool live_markers = false;
  std::chrono::milliseconds settle_timeout = browser::kDefaultSettleTimeout;
  int max_replay_clicks = 3;
};

// An element as found on the current page, before probing.
struct Candidate {
  obs::ElementMeta meta;
  browser::Point click_point;
};

std::vector<Candidate> discover_elements(browser::BrowserSession& session, Instrumentation* instrumentation,
                                         const obs::AXTree& ax);

// (role, name, last two segments of the css path).
std::string element_signature(const obs::ElementMeta& m);

// Captures standalone, base, base_rect, hover and click for one element.
// The page must be in the element's pre-click state. Throws StaleTarget when
// the page changes before the element is clicked.
InteractionRecord capture_interaction_states(browser::BrowserSession& session, const Candidate& element,
                                             Instrumentation* instrumentation, const CrawlOptions& options);

struct CrawlStats {
  int probed = 0;
  int failures = 0;
  int duplicates = 0;
};

CrawlStore crawl_site(browser::BrowserSession& session, const std::string& start_url, const CrawlOptions& options,
                      Instrumentation* instrumentation = nullptr, CrawlStats* stats = nullptr);

// Store directory name for a URL: its host with non-alphanumerics replaced.
std::string site_name(const std::string& url);

}  // namespace cogweb::crawl
