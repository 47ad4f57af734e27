#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "cogweb/error.hpp"
#include "cogweb/evaluator/evaluator.hpp"
#include "cogweb/popup/popup.hpp"
#include "mock_model.hpp"

using namespace cogweb;
using namespace cogweb::popup;
namespace fs = std::filesystem;

namespace {

PopupAsset cookie() { return PopupAsset::load(cogweb::testing::fixture("popups/cookie_banner")); }

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return Errc::InvalidArgument;
}

obs::AXTree random_tree(Rng& rng, int max_nodes, const std::string& tag) {
  static const char* roles[] = {"button", "link", "StaticText", "heading", "textbox", "generic"};
  obs::AXTree t;
  const int n = rng.uniform_int(1, max_nodes);
  for (int i = 0; i < n; ++i) {
    obs::AXNode node;
    node.id = i;
    node.role = i == 0 ? "RootWebArea" : roles[rng.uniform_index(6)];
    node.name = tag + std::to_string(rng.uniform_int(0, 4));
    node.depth = i == 0 ? 0 : rng.uniform_int(1, t.nodes.back().depth + 1);
    node.backend_id = 100 + i;
    t.nodes.push_back(node);
  }
  return t;
}

std::multiset<std::pair<std::string, std::string>> role_names(const obs::AXTree& t) {
  std::multiset<std::pair<std::string, std::string>> out;
  for (const auto& n : t.nodes) out.insert({n.role, n.name});
  return out;
}

agent::Trajectory sample_trajectory(int steps) {
  agent::Trajectory t;
  t.task_id = "t1";
  t.query = "Find the lamp";
  t.initial_url = "https://shop.example/";
  for (int i = 1; i <= steps; ++i) {
    agent::Step s;
    s.observation.step = i;
    s.observation.url = "https://shop.example/p" + std::to_string(i);
    s.observation.ax = obs::parse_ax_text("[0] RootWebArea 'Page " + std::to_string(i) +
                                          "'\n  [1] link 'Next'\n  [2] heading 'Title'\n");
    s.observation.ax_text = obs::serialize_ax(s.observation.ax);
    s.observation.screenshot = Image(320, 200, {static_cast<std::uint8_t>(20 * i), 90, 160, 255});
    s.action = agent::Click{1};
    s.raw_output = "## Final Action Summary\nclick [1]";
    s.thought = agent::parse_thought(s.raw_output);
    t.steps.push_back(std::move(s));
  }
  t.termination = agent::Termination::Stopped;
  t.answer = "lamp";
  return t;
}

}  // namespace

TEST(ImageOps, BrightnessScalesColourOnly) {
  Image img(2, 1, {200, 100, 3, 77});
  const Image half = adjust_brightness(img, 0.5);
  EXPECT_EQ(half.at(0, 0), (Rgba{100, 50, 2, 77}));
  EXPECT_EQ(adjust_brightness(img, 2.0).at(1, 0), (Rgba{255, 200, 6, 77}));
  EXPECT_EQ(adjust_brightness(img, 1.0), img);
}

TEST(ImageOps, SharpnessKeepsFlatRegionsAndEdges) {
  Image flat(5, 5, {80, 80, 80, 255});
  EXPECT_EQ(adjust_sharpness(flat, 0.2), flat);
  Image dot(5, 5, {0, 0, 0, 255});
  dot.set(2, 2, {130, 130, 130, 255});
  // The smoothed centre is 130*5/13 = 50; factor 0 gives the smoothed value,
  // factor 2 extrapolates to 2*130 - 50 = 210.
  EXPECT_EQ(adjust_sharpness(dot, 0.0).at(2, 2).r, 50);
  EXPECT_EQ(adjust_sharpness(dot, 2.0).at(2, 2).r, 210);
  EXPECT_EQ(adjust_sharpness(dot, 0.0).at(1, 1).r, 10);
  EXPECT_EQ(adjust_sharpness(dot, 0.0).at(0, 0), dot.at(0, 0));
}

TEST(ImageOps, BilinearResize) {
  Image src(2, 1);
  src.set(0, 0, {0, 0, 0, 255});
  src.set(1, 0, {200, 200, 200, 255});
  const Image up = resize_bilinear(src, 4, 1);
  // Sample centres at source x = -0.25, 0.25, 0.75, 1.25 (clamped).
  EXPECT_EQ(up.at(0, 0).r, 0);
  EXPECT_EQ(up.at(1, 0).r, 50);
  EXPECT_EQ(up.at(2, 0).r, 150);
  EXPECT_EQ(up.at(3, 0).r, 200);
  Image flat(7, 3, {9, 8, 7, 255});
  EXPECT_EQ(resize_bilinear(flat, 3, 11), Image(3, 11, {9, 8, 7, 255}));
  EXPECT_THROW(resize_bilinear(flat, 0, 1), Error);
}

TEST(ImageOps, AlphaOver) {
  Image dst(3, 3, {0, 0, 200, 255});
  Image src(2, 2, {255, 0, 0, 128});
  src.set(1, 1, {1, 2, 3, 0});
  alpha_over(dst, src, 2, 2);
  // (255*128 + 0*127 + 127)/255 = 128, (200*127 + 127)/255 = 100
  EXPECT_EQ(dst.at(2, 2), (Rgba{128, 0, 100, 255}));
  EXPECT_EQ(dst.at(1, 1), (Rgba{0, 0, 200, 255}));
  alpha_over(dst, src, -1, -1);
  EXPECT_EQ(dst.at(0, 0), (Rgba{0, 0, 200, 255}));
}

TEST(Compositing, PlacementStaysInsideAndRespectsRanges) {
  const auto asset = cookie();
  const Image bg = read_png(cogweb::testing::fixture("backgrounds/home.png"));
  JitterRanges ranges;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed);
    const auto [img, p] = composite_popup(bg, asset, rng, ranges);
    EXPECT_EQ(img.width(), bg.width());
    EXPECT_EQ(bg.bounds().intersect(p.rect()), p.rect());
    EXPECT_GE(p.scale, ranges.scale_min);
    EXPECT_LT(p.scale, ranges.scale_max);
    EXPECT_GE(p.brightness, ranges.brightness_min);
    EXPECT_LT(p.brightness, ranges.brightness_max);
    EXPECT_EQ(composite_popup(bg, asset, p), img);
    const Image jittered = adjust_sharpness(adjust_brightness(bg, p.brightness), p.sharpness);
    const Image popup = resize_bilinear(asset.image, p.width, p.height);
    for (auto [x, y] : {std::pair{0, 0}, {bg.width() - 1, bg.height() - 1}}) {
      if (!p.rect().contains(x, y)) EXPECT_EQ(img.at(x, y), jittered.at(x, y));
    }
    const int cx = p.x + p.width / 2, cy = p.y + p.height / 2;
    if (popup.at(p.width / 2, p.height / 2).a == 255) EXPECT_EQ(img.at(cx, cy), popup.at(p.width / 2, p.height / 2));
  }
  Rng a(9), b(9);
  EXPECT_EQ(composite_popup(bg, asset, a).first, composite_popup(bg, asset, b).first);
}

TEST(Compositing, RejectsOversizedAssets) {
  auto tall = cookie();
  tall.image = Image(20, 400, {255, 255, 255, 255});
  Rng rng(1);
  EXPECT_EQ(code_of([&] { composite_popup(Image(200, 100), tall, rng); }), Errc::AssetTooLarge);
  Placement p;
  p.x = 150;
  p.width = 100;
  p.height = 10;
  EXPECT_EQ(code_of([&] { composite_popup(Image(200, 100), tall, p); }), Errc::InvalidArgument);
}

TEST(Asset, SaveLoadAndValidation) {
  const auto asset = cookie();
  EXPECT_EQ(asset.close_methods.size(), 3u);
  const auto dir = cogweb::testing::scratch_dir("asset") / "copy";
  asset.save(dir);
  const auto back = PopupAsset::load(dir);
  EXPECT_EQ(back.image, asset.image);
  EXPECT_EQ(back.ax, asset.ax);
  EXPECT_EQ(back.close_methods, asset.close_methods);
  auto bad = asset;
  bad.close_methods = {{9, "click", "x"}};
  EXPECT_EQ(code_of([&] { bad.validate(); }), Errc::InvalidArgument);
  bad.close_methods.clear();
  EXPECT_EQ(code_of([&] { bad.validate(); }), Errc::InvalidArgument);
  bad.close_methods = {{2, "swipe", "x"}};
  EXPECT_EQ(code_of([&] { bad.validate(); }), Errc::InvalidArgument);
}

TEST(Injection, PreservesNodesAndRenumbers) {
  Rng gen(77);
  for (int trial = 0; trial < 300; ++trial) {
    const auto page = random_tree(gen, 12, "p");
    auto popup = random_tree(gen, 5, "q");
    popup.nodes[0].role = "dialog";
    const auto merged = inject_popup_ax(page, popup, gen);
    ASSERT_EQ(merged.tree.size(), page.size() + popup.size());
    for (std::size_t i = 0; i < merged.tree.size(); ++i) EXPECT_EQ(merged.tree.nodes[i].id, static_cast<int>(i));
    auto want = role_names(page);
    for (const auto& rn : role_names(popup)) want.insert(rn);
    EXPECT_EQ(role_names(merged.tree), want);
    std::string why;
    EXPECT_TRUE(obs::is_well_formed(merged.tree, &why)) << why;
    EXPECT_EQ(merged.tree.nodes[0], page.nodes[0]);
    // Popup nodes are contiguous, rooted directly under the page root.
    for (std::size_t i = 1; i < popup.size(); ++i) EXPECT_EQ(merged.popup_ids[i], merged.popup_ids[0] + int(i));
    EXPECT_EQ(merged.tree.nodes[merged.popup_ids[0]].depth, 1);
    for (std::size_t i = 0; i < popup.size(); ++i) {
      const auto& n = merged.tree.nodes[merged.popup_ids[i]];
      EXPECT_EQ(n.name, popup.nodes[i].name);
      EXPECT_LT(n.backend_id, 0);
    }
    for (std::size_t i = 0; i < page.size(); ++i) {
      EXPECT_EQ(merged.tree.nodes[merged.page_ids[i]].backend_id, page.nodes[i].backend_id);
    }
  }
}

TEST(Injection, SlotsAreAllReachable) {
  const auto page = obs::parse_ax_text("[0] RootWebArea 'x'\n  [1] link 'a'\n    [2] StaticText 'a'\n  [3] link 'b'\n");
  const auto popup = obs::parse_ax_text("[0] dialog 'd'\n  [1] button 'Close'\n");
  std::set<int> slots;
  for (std::uint64_t s = 0; s < 60; ++s) {
    Rng rng(s);
    slots.insert(inject_popup_ax(page, popup, rng).slot);
  }
  EXPECT_EQ(slots, (std::set<int>{0, 1, 2}));
}

TEST(Subsets, CountAndDistinctness) {
  for (std::size_t n = 1; n <= 10; ++n) {
    const auto subsets = enumerate_close_subsets(n);
    EXPECT_EQ(subsets.size(), (std::size_t{1} << n) - 1);
    std::set<std::vector<int>> seen(subsets.begin(), subsets.end());
    EXPECT_EQ(seen.size(), subsets.size());
    for (const auto& s : subsets) {
      EXPECT_FALSE(s.empty());
      EXPECT_TRUE(std::is_sorted(s.begin(), s.end()));
      EXPECT_LT(s.back(), static_cast<int>(n));
    }
  }
  EXPECT_EQ(enumerate_close_subsets(2), (std::vector<std::vector<int>>{{0}, {1}, {0, 1}}));
  EXPECT_EQ(code_of([] { enumerate_close_subsets(0); }), Errc::InvalidArgument);
  EXPECT_EQ(code_of([] { enumerate_close_subsets(11); }), Errc::TooManyMethods);
}

TEST(NoisyTrajectory, InsertsOneDismissStep) {
  const auto asset = cookie();
  const auto traj = sample_trajectory(4);
  for (int t = 1; t <= 4; ++t) {
    Rng rng(static_cast<std::uint64_t>(t));
    const auto noisy = build_noisy_trajectory(traj, asset, t, rng);
    ASSERT_EQ(noisy.steps.size(), traj.steps.size() + 1);
    for (int i = 0; i < t - 1; ++i) {
      const auto& a = noisy.steps[i];
      const auto& b = traj.steps[i];
      EXPECT_EQ(a.observation.screenshot, b.observation.screenshot);
      EXPECT_EQ(a.observation.ax_text, b.observation.ax_text);
      EXPECT_EQ(a.observation.step, b.observation.step);
      EXPECT_EQ(a.raw_output, b.raw_output);
      EXPECT_EQ(a.action, b.action);
    }
    for (std::size_t i = t; i < noisy.steps.size(); ++i) {
      EXPECT_EQ(noisy.steps[i].observation.ax_text, traj.steps[i - 1].observation.ax_text);
      EXPECT_EQ(noisy.steps[i].action, traj.steps[i - 1].action);
      EXPECT_EQ(noisy.steps[i].observation.step, static_cast<int>(i) + 1);
    }
    const auto& d = noisy.steps[t - 1];
    EXPECT_EQ(d.observation.step, t);
    EXPECT_EQ(d.observation.url, traj.steps[t - 1].observation.url);
    EXPECT_NE(d.observation.screenshot, traj.steps[t - 1].observation.screenshot);
    const int target = std::get<agent::Click>(d.action).id;
    const auto* node = d.observation.ax.find(target);
    ASSERT_NE(node, nullptr);
    EXPECT_EQ(node->role, "button");
    EXPECT_TRUE(node->name == "Accept all" || node->name == "Reject" || node->name == "Close") << node->name;
    EXPECT_EQ(agent::parse_action(d.raw_output), d.action);
    EXPECT_EQ(d.observation.ax_text, obs::serialize_ax(d.observation.ax));
    EXPECT_EQ(noisy.answer, traj.answer);
  }
  Rng rng(1);
  EXPECT_EQ(code_of([&] { build_noisy_trajectory(traj, asset, 0, rng); }), Errc::StepOutOfRange);
  EXPECT_EQ(code_of([&] { build_noisy_trajectory(traj, asset, 5, rng); }), Errc::StepOutOfRange);
}

TEST(PopupClose, GoldListsEveryMethodSubset) {
  const auto asset = cookie();
  const auto out = cogweb::testing::scratch_dir("popup-close");
  tasks::ImageSink sink(out);
  const auto page = obs::parse_ax_text(read_text_file(cogweb::testing::fixture("backgrounds/home.ax.txt")));
  Rng rng(4);
  const auto t = gen_popup_close("x", read_png(cogweb::testing::fixture("backgrounds/home.png")), page, asset, rng, sink);
  EXPECT_EQ(t.gold.kind, "strategy_set");
  EXPECT_EQ(t.gold.value.size(), 7u);
  EXPECT_EQ(tasks::check_instance(t), "");
  const auto& methods = t.source["methods"];
  ASSERT_EQ(methods.size(), 3u);
  const auto merged = obs::parse_ax_text(t.prompt.substr(t.prompt.find("[0]")));
  for (const auto& m : methods) EXPECT_EQ(merged.find(m["element"].get<int>())->role, "button");
  const std::string one = std::to_string(methods[0]["element"].get<int>());
  const std::string two = std::to_string(methods[2]["element"].get<int>());
  EXPECT_DOUBLE_EQ(eval::score_instance(t, one).value, 100.0);
  EXPECT_DOUBLE_EQ(eval::score_instance(t, two + ", " + one).value, 100.0);
  EXPECT_DOUBLE_EQ(eval::score_instance(t, "0").value, 0.0);
}

TEST(Synthesize, SeededRunsAreByteIdentical) {
  const std::vector<fs::path> assets = {cogweb::testing::fixture("popups/newsletter"),
                                        cogweb::testing::fixture("popups/cookie_banner")};
  const std::vector<fs::path> bgs = {cogweb::testing::fixture("backgrounds/list.png"),
                                     cogweb::testing::fixture("backgrounds/home.png")};
  SynthOptions opts;
  opts.seed = 11;
  opts.per_background = 2;
  const auto a = cogweb::testing::scratch_dir("synth-a");
  const auto b = cogweb::testing::scratch_dir("synth-b");
  const auto ta = synthesize(assets, bgs, a, opts);
  synthesize(assets, bgs, b, opts);
  EXPECT_EQ(ta.size(), 8u);
  EXPECT_EQ(read_text_file(a / "manifest.jsonl"), read_text_file(b / "manifest.jsonl"));
  for (const auto& t : ta) {
    for (const auto& img : t.images) EXPECT_EQ(read_png(a / img), read_png(b / img));
  }
  opts.seed = 12;
  const auto c = cogweb::testing::scratch_dir("synth-c");
  synthesize(assets, bgs, c, opts);
  EXPECT_NE(read_text_file(a / "manifest.jsonl"), read_text_file(c / "manifest.jsonl"));
}
