#include "cogweb/crawler/instrumentation.hpp"

#include <cstdlib>

#include "cogweb/error.hpp"

namespace cogweb::crawl {

Instrumentation::Instrumentation(browser::BrowserSession& session, std::string bundle)
    : session_(session), bundle_(std::move(bundle)) {}

bool Instrumentation::ensure_installed() {
  if (session_.evaluate_script("typeof window.__cogweb") == "object") return true;
  if (bundle_.empty()) return false;
  session_.evaluate_script(bundle_);
  return session_.evaluate_script("typeof window.__cogweb") == "object";
}

json Instrumentation::call(const std::string& fn, const json& args) {
  if (!ensure_installed()) throw Error(Errc::ScriptError, "instrumentation bundle is not available");
  std::string arglist;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (i) arglist += ", ";
    arglist += args[i].dump();
  }
  return session_.evaluate_script("window.__cogweb." + fn + "(" + arglist + ")");
}

std::vector<InPageElementRecord> Instrumentation::collect_interactives() {
  std::vector<InPageElementRecord> out;
  for (const auto& r : call("collectInteractives", json::array())) {
    InPageElementRecord rec;
    rec.css = r.value("css", "");
    rec.allcss = r.value("allcss", "");
    rec.outer_html = r.value("outer_html", "");
    rec.visible = r.value("visible", true);
    const auto& b = r.at("bbox");
    rec.bbox = {static_cast<int>(b.at("x").get<double>()), static_cast<int>(b.at("y").get<double>()),
                static_cast<int>(b.at("width").get<double>()), static_cast<int>(b.at("height").get<double>())};
    if (rec.visible) out.push_back(std::move(rec));
  }
  return out;
}

int Instrumentation::highlight(const std::string& css, const std::string& label) {
  return call("highlight", json::array({css, label.empty() ? json(nullptr) : json(label)})).get<int>();
}

int Instrumentation::clear_highlights() { return call("clearHighlights", json::array()).get<int>(); }

std::pair<std::string, std::string> Instrumentation::compute_css_path(const std::string& css) {
  const json r = call("computeCssPath", json::array({css}));
  return {r.at("css").get<std::string>(), r.at("allcss").get<std::string>()};
}

std::string load_instrumentation_bundle(const std::string& path) {
  std::string p = path;
  if (p.empty()) {
    if (const char* env = std::getenv("COGWEB_INSTRUMENTATION")) p = env;
  }
  if (p.empty()) return {};
  return read_text_file(p);
}

}  // namespace cogweb::crawl
