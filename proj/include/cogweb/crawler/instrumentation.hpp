#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cogweb/browser/session.hpp"

namespace cogweb::crawl {

struct InPageElementRecord {
  std::string css;
  std::string allcss;
  std::string outer_html;
  Rect bbox;
  bool visible = true;
};

// Host-side wrapper around the in-page script bundle exposed as window.__cogweb.
// The bundle is injected on demand since navigations discard it.
class Instrumentation {
 public:
  explicit Instrumentation(browser::BrowserSession& session, std::string bundle = {});

  // Returns false when the page has no bundle and none was supplied.
  bool ensure_installed();
  std::vector<InPageElementRecord> collect_interactives();
  int highlight(const std::string& css, const std::string& label = {});
  int clear_highlights();
  std::pair<std::string, std::string> compute_css_path(const std::string& css);

 private:
  json call(const std::string& fn, const json& args);

  browser::BrowserSession& session_;
  std::string bundle_;
};

// Reads the bundle from `path`, or from $COGWEB_INSTRUMENTATION when path is
// empty. Returns an empty string if neither is set.
std::string load_instrumentation_bundle(const std::string& path = {});

}  // namespace cogweb::crawl
