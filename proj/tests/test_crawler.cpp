#include <gtest/gtest.h>

#include <set>

#include "cogweb/crawler/crawler.hpp"
#include "cogweb/error.hpp"
#include "cogweb/observation/marker.hpp"
#include "cogweb/sim/sim_browser.hpp"
#include "mock_model.hpp"

using namespace cogweb;
using namespace cogweb::crawl;
using namespace std::chrono_literals;

namespace {

sim::SimBrowser open_site() {
  sim::SimBrowser b(sim::SimSite::load(cogweb::testing::fixture("site.json")));
  b.navigate("https://shop.example/", 1s);
  return b;
}

const Candidate* find_candidate(const std::vector<Candidate>& cs, const std::string& name) {
  for (const auto& c : cs) {
    if (c.meta.name == name) return &c;
  }
  return nullptr;
}

}  // namespace

TEST(DiffAx, MultisetDifference) {
  const auto before = obs::parse_ax_text(
      "[0] RootWebArea 'p'\n  [1] button 'Menu'\n  [2] link 'A'\n  [3] link 'A'\n  [4] heading 'Hi'\n");
  const auto after = obs::parse_ax_text(
      "[0] RootWebArea 'p'\n  [1] button 'Menu' (expanded)\n    [2] menuitem 'One'\n  [3] link 'A'\n"
      "  [4] heading 'Bye'\n");
  const AXDiff d = diff_ax(before, after);
  const std::vector<AXTriple> added = {{"menuitem", "One", "button 'Menu'"}, {"heading", "Bye", ""}};
  const std::vector<AXTriple> removed = {{"link", "A", ""}, {"heading", "Hi", ""}};
  EXPECT_EQ(d.added, added);
  EXPECT_EQ(d.removed, removed);
  EXPECT_FALSE(d.url_changed);
  EXPECT_TRUE(diff_ax(before, before).empty());
  const AXDiff back = ax_diff_from_json(to_json(d));
  EXPECT_EQ(back.added, d.added);
  EXPECT_EQ(back.removed, d.removed);
}

TEST(Signature, UsesRoleNameAndCssTail) {
  obs::ElementMeta m;
  m.role = "link";
  m.name = "Home";
  m.allcss = "html > body > nav > a:nth-of-type(2)";
  EXPECT_EQ(element_signature(m), "link\x1fHome\x1fnav > a:nth-of-type(2)");
  m.allcss.clear();
  m.css.clear();
  m.location = {3, 4, 5, 6};
  EXPECT_EQ(element_signature(m), "link\x1fHome\x1f@3,4");
}

TEST(SiteName, FromUrl) {
  EXPECT_EQ(site_name("https://shop.example/products"), "shop_example");
  EXPECT_EQ(site_name("http://127.0.0.1:8000"), "127_0_0_1_8000");
}

TEST(Discover, MatchesAxNodesWithInstrumentation) {
  auto b = open_site();
  Instrumentation instr(b);
  const auto ax = obs::compose_observation(b, 1).ax;
  const auto cs = discover_elements(b, &instr, ax);
  std::vector<std::string> names;
  for (const auto& c : cs) names.push_back(c.meta.role + ":" + c.meta.name);
  const std::vector<std::string> expected = {"link:Products",         "link:About us",
                                             "button:Categories",     "button:Today's deals",
                                             "searchbox:Search products", "checkbox:Subscribe to newsletter"};
  EXPECT_EQ(names, expected);
  const auto* deals = find_candidate(cs, "Today's deals");
  ASSERT_NE(deals, nullptr);
  EXPECT_EQ(deals->meta.css, "#deals");
  EXPECT_EQ(deals->meta.location, (Rect{40, 140, 200, 48}));
  EXPECT_EQ(deals->click_point, (browser::Point{140, 164}));
}

TEST(Discover, WorksWithoutInstrumentation) {
  auto b = open_site();
  const auto ax = obs::compose_observation(b, 1).ax;
  const auto cs = discover_elements(b, nullptr, ax);
  EXPECT_EQ(cs.size(), 6u);
  for (const auto& c : cs) EXPECT_TRUE(c.meta.css.empty());
}

TEST(Capture, FiveStatesForHoverButton) {
  auto b = open_site();
  Instrumentation instr(b);
  const auto cs = discover_elements(b, &instr, obs::compose_observation(b, 1).ax);
  const auto* deals = find_candidate(cs, "Today's deals");
  ASSERT_NE(deals, nullptr);
  CrawlOptions opts;
  const auto rec = capture_interaction_states(b, *deals, &instr, opts);

  const Rect loc = deals->meta.location;
  EXPECT_EQ(rec.shots.standalone.width(), loc.w + 16);
  EXPECT_EQ(rec.shots.standalone.height(), loc.h + 16);
  EXPECT_EQ(rec.shots.base_rect, obs::draw_marker(rec.shots.base, loc));
  // Hover CSS applies inside the element only.
  std::size_t changed = 0;
  for (int y = 0; y < rec.shots.base.height(); ++y) {
    for (int x = 0; x < rec.shots.base.width(); ++x) {
      if (rec.shots.base.at(x, y) == rec.shots.hover.at(x, y)) continue;
      ASSERT_TRUE(loc.contains(x, y));
      ++changed;
    }
  }
  EXPECT_GT(changed, 0u);
  EXPECT_EQ(rec.pre_url, rec.post_url);
  const std::vector<AXTriple> added = {{"heading", "Deals updated", ""}};
  EXPECT_EQ(rec.diff.added, added);
  EXPECT_EQ(rec.element.role, "button");
}

TEST(Capture, LiveMarkersMatchImageSpaceMarkers) {
  auto b = open_site();
  Instrumentation instr(b);
  const auto cs = discover_elements(b, &instr, obs::compose_observation(b, 1).ax);
  const auto* menu = find_candidate(cs, "Categories");
  ASSERT_NE(menu, nullptr);
  CrawlOptions opts;
  opts.live_markers = true;
  const auto rec = capture_interaction_states(b, *menu, &instr, opts);
  EXPECT_NE(rec.shots.base_rect, rec.shots.base);
  EXPECT_EQ(b.highlight_count(), 0u);
}

TEST(Capture, StaleWhenPageChanged) {
  auto b = open_site();
  const auto cs = discover_elements(b, nullptr, obs::compose_observation(b, 1).ax);
  b.navigate("https://shop.example/about", 1s);
  try {
    capture_interaction_states(b, cs.front(), nullptr, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::StaleTarget);
  }
}

TEST(Crawl, RecoversFixtureInteractables) {
  auto b = open_site();
  Instrumentation instr(b);
  CrawlOptions opts;
  opts.max_layers = 2;
  CrawlStats stats;
  const auto store = crawl_site(b, "https://shop.example/", opts, &instr, &stats);
  // Ground truth: every interactable visible without scrolling on the three
  // pages, plus the menu items revealed by the dropdown. The about page's
  // Home link repeats the products page's (same target, same signature) and
  // is recorded once.
  const std::set<std::pair<std::string, std::string>> truth = {
      {"https://shop.example/", "link:Products"},
      {"https://shop.example/", "link:About us"},
      {"https://shop.example/", "button:Categories"},
      {"https://shop.example/", "button:Today's deals"},
      {"https://shop.example/", "searchbox:Search products"},
      {"https://shop.example/", "checkbox:Subscribe to newsletter"},
      {"https://shop.example/", "menuitem:Books"},
      {"https://shop.example/", "menuitem:Games"},
      {"https://shop.example/products", "link:Home"},
      {"https://shop.example/products", "link:Desk lamp"},
      {"https://shop.example/products", "button:Add chair to cart"},
      {"https://shop.example/about", "button:Contact us"},
  };
  std::set<std::pair<std::string, std::string>> found;
  std::set<std::string> ids;
  std::set<std::string> post_keys;
  for (const auto& r : store.records) {
    found.insert({r.pre_url, r.element.role + ":" + r.element.name});
    EXPECT_TRUE(ids.insert(r.id).second);
    EXPECT_TRUE(post_keys.insert(r.post_url + "|" + element_signature(r.element)).second);
    EXPECT_GE(r.layer, 1);
    EXPECT_LE(r.layer, 2);
    EXPECT_EQ(r.diff.url_changed, r.pre_url != r.post_url);
  }
  EXPECT_EQ(found, truth);
  EXPECT_EQ(stats.failures, 0);
  EXPECT_GE(stats.duplicates, 1);
  EXPECT_EQ(store.site, "shop_example");
}

TEST(Crawl, OneLayerStaysOnStartPage) {
  auto b = open_site();
  CrawlOptions opts;
  opts.max_layers = 1;
  const auto store = crawl_site(b, "https://shop.example/", opts);
  EXPECT_EQ(store.records.size(), 6u);
  for (const auto& r : store.records) {
    EXPECT_EQ(r.layer, 1);
    EXPECT_EQ(r.pre_url, "https://shop.example/");
  }
}

TEST(Crawl, BudgetsAndLayerBounds) {
  auto b = open_site();
  CrawlOptions opts;
  opts.budget.max_records = 3;
  EXPECT_EQ(crawl_site(b, "https://shop.example/", opts).records.size(), 3u);
  opts.budget = {2, 100};
  opts.max_layers = 1;
  EXPECT_EQ(crawl_site(b, "https://shop.example/", opts).records.size(), 2u);
  opts.max_layers = 0;
  EXPECT_THROW(crawl_site(b, "https://shop.example/", opts), Error);
  opts.max_layers = 7;
  EXPECT_THROW(crawl_site(b, "https://shop.example/", opts), Error);
}

TEST(Crawl, IsDeterministic) {
  auto b1 = open_site();
  auto b2 = open_site();
  const auto s1 = crawl_site(b1, "https://shop.example/", {});
  const auto s2 = crawl_site(b2, "https://shop.example/", {});
  ASSERT_EQ(s1.records.size(), s2.records.size());
  for (std::size_t i = 0; i < s1.records.size(); ++i) {
    EXPECT_EQ(s1.records[i].element, s2.records[i].element);
    EXPECT_EQ(s1.records[i].shots.click, s2.records[i].shots.click);
  }
}

TEST(Store, SaveLoadRoundTrip) {
  auto b = open_site();
  Instrumentation instr(b);
  const auto store = crawl_site(b, "https://shop.example/", {}, &instr);
  const auto root = cogweb::testing::scratch_dir("store");
  store.save(root);
  EXPECT_TRUE(std::filesystem::exists(root / "shop_example" / "pages.json"));
  EXPECT_TRUE(std::filesystem::exists(root / "shop_example" / "1" / store.records[0].id / "base_rect.png"));
  const auto back = CrawlStore::load(root / "shop_example");
  EXPECT_EQ(back.site, store.site);
  ASSERT_EQ(back.records.size(), store.records.size());
  ASSERT_EQ(back.pages.size(), store.pages.size());
  for (std::size_t i = 0; i < store.records.size(); ++i) {
    const auto& a = store.records[i];
    const auto& c = back.records[i];
    EXPECT_EQ(a.id, c.id);
    EXPECT_EQ(a.element, c.element);
    EXPECT_EQ(a.layer, c.layer);
    EXPECT_EQ(a.pre_url, c.pre_url);
    EXPECT_EQ(a.post_url, c.post_url);
    EXPECT_EQ(obs::serialize_ax(a.pre_ax), obs::serialize_ax(c.pre_ax));
    EXPECT_EQ(obs::serialize_ax(a.post_ax), obs::serialize_ax(c.post_ax));
    EXPECT_EQ(a.diff.added, c.diff.added);
    EXPECT_EQ(a.diff.url_changed, c.diff.url_changed);
    EXPECT_EQ(a.shots.hover, c.shots.hover);
    EXPECT_EQ(a.shots.standalone, c.shots.standalone);
  }
  EXPECT_THROW(CrawlStore::load(root / "missing"), Error);
}
