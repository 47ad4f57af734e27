#include "cogweb/popup/popup.hpp"

#include <algorithm>
#include <cmath>

#include "cogweb/error.hpp"
#include "cogweb/taskgen/families.hpp"

namespace cogweb::popup {

namespace fs = std::filesystem;

void PopupAsset::validate() const {
  if (close_methods.empty()) throw Error(Errc::InvalidArgument, "popup '" + name + "' has no close methods");
  for (const auto& m : close_methods) {
    if (!ax.find(m.element)) {
      throw Error(Errc::InvalidArgument,
                  "popup '" + name + "' close method refers to missing node " + std::to_string(m.element));
    }
    if (m.action != "click" && m.action != "dbclick") {
      throw Error(Errc::InvalidArgument, "popup '" + name + "' close action must be click or dbclick");
    }
  }
  if (image.empty()) throw Error(Errc::InvalidArgument, "popup '" + name + "' has no image");
}

PopupAsset PopupAsset::load(const fs::path& dir) {
  PopupAsset a;
  a.name = dir.filename().string();
  a.image = read_png(dir / "popup.png");
  a.ax = obs::parse_ax_text(read_text_file(dir / "ax.txt"));
  const json j = json::parse(read_text_file(dir / "close.json"));
  for (const auto& m : j.at("methods")) {
    a.close_methods.push_back({m.at("element").get<int>(), m.value("action", "click"), m.value("label", "")});
  }
  a.validate();
  return a;
}

void PopupAsset::save(const fs::path& dir) const {
  fs::create_directories(dir);
  write_png(image, dir / "popup.png");
  write_text_file(dir / "ax.txt", obs::serialize_ax(ax));
  json methods = json::array();
  for (const auto& m : close_methods) methods.push_back({{"element", m.element}, {"action", m.action}, {"label", m.label}});
  write_text_file(dir / "close.json", json{{"methods", methods}}.dump(2) + "\n");
}

json to_json(const Placement& p) {
  return {{"scale", p.scale},   {"x", p.x},
          {"y", p.y},           {"width", p.width},
          {"height", p.height}, {"brightness", p.brightness},
          {"sharpness", p.sharpness}, {"rng_seed", p.rng_seed}};
}

namespace {

std::uint8_t clamp_byte(double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); }

}  // namespace

Image adjust_brightness(const Image& img, double factor) {
  if (factor == 1.0) return img;
  Image out = img;
  auto px = out.bytes();
  for (std::size_t i = 0; i < px.size(); i += 4) {
    for (int c = 0; c < 3; ++c) px[i + c] = clamp_byte(px[i + c] * factor);
  }
  return out;
}

Image adjust_sharpness(const Image& img, double factor) {
  if (factor == 1.0 || img.width() < 3 || img.height() < 3) return img;
  const int w = img.width(), h = img.height();
  const auto src = img.bytes();
  Image out = img;
  auto dst = out.bytes();
  for (int y = 1; y < h - 1; ++y) {
    for (int x = 1; x < w - 1; ++x) {
      const std::size_t at = (static_cast<std::size_t>(y) * w + x) * 4;
      for (int c = 0; c < 3; ++c) {
        int sum = 0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const std::size_t n = (static_cast<std::size_t>(y + dy) * w + (x + dx)) * 4 + c;
            sum += src[n] * (dx == 0 && dy == 0 ? 5 : 1);
          }
        }
        const double smooth = sum / 13.0;
        dst[at + c] = clamp_byte(smooth + factor * (src[at + c] - smooth));
      }
    }
  }
  return out;
}

Image resize_bilinear(const Image& img, int width, int height) {
  if (width <= 0 || height <= 0) throw Error(Errc::InvalidArgument, "resize target must be positive");
  if (width == img.width() && height == img.height()) return img;
  Image out(width, height, {0, 0, 0, 0});
  const auto src = img.bytes();
  auto dst = out.bytes();
  const double sx = double(img.width()) / width;
  const double sy = double(img.height()) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, double(img.height() - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height() - 1);
    const double ty = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, double(img.width() - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width() - 1);
      const double tx = fx - x0;
      auto at = [&](int xx, int yy, int c) { return double(src[(static_cast<std::size_t>(yy) * img.width() + xx) * 4 + c]); };
      for (int c = 0; c < 4; ++c) {
        const double top = at(x0, y0, c) * (1 - tx) + at(x1, y0, c) * tx;
        const double bottom = at(x0, y1, c) * (1 - tx) + at(x1, y1, c) * tx;
        dst[(static_cast<std::size_t>(y) * width + x) * 4 + c] = clamp_byte(top * (1 - ty) + bottom * ty);
      }
    }
  }
  return out;
}

void alpha_over(Image& dst, const Image& src, int ox, int oy) {
  const Rect area = Rect{ox, oy, src.width(), src.height()}.intersect(dst.bounds());
  for (int y = area.y; y < area.bottom(); ++y) {
    for (int x = area.x; x < area.right(); ++x) {
      const Rgba s = src.at(x - ox, y - oy);
      if (s.a == 0) continue;
      if (s.a == 255) {
        dst.set(x, y, s);
        continue;
      }
      const Rgba d = dst.at(x, y);
      auto mix = [&](std::uint8_t a, std::uint8_t b) {
        return static_cast<std::uint8_t>((a * s.a + b * (255 - s.a) + 127) / 255);
      };
      const auto alpha = static_cast<std::uint8_t>(s.a + (d.a * (255 - s.a) + 127) / 255);
      dst.set(x, y, {mix(s.r, d.r), mix(s.g, d.g), mix(s.b, d.b), alpha});
    }
  }
}

Image composite_popup(const Image& background, const PopupAsset& asset, const Placement& p) {
  if (p.rect().empty()) throw Error(Errc::InvalidArgument, "popup rectangle is empty");
  if (background.bounds().intersect(p.rect()) != p.rect()) {
    throw Error(Errc::InvalidArgument, "popup rectangle leaves the background");
  }
  Image out = adjust_sharpness(adjust_brightness(background, p.brightness), p.sharpness);
  alpha_over(out, resize_bilinear(asset.image, p.width, p.height), p.x, p.y);
  return out;
}

std::pair<Image, Placement> composite_popup(const Image& background, const PopupAsset& asset, Rng& rng,
                                            const JitterRanges& ranges) {
  if (asset.image.empty() || background.empty()) throw Error(Errc::InvalidArgument, "empty image");
  const double aspect = double(asset.image.height()) / asset.image.width();
  const double fit_scale = background.height() / (aspect * background.width());
  if (fit_scale < ranges.scale_min || ranges.scale_min * background.width() < 1) {
    throw Error(Errc::AssetTooLarge, "popup '" + asset.name + "' does not fit the background at minimum scale");
  }
  Placement p;
  p.rng_seed = rng.next();
  Rng local(p.rng_seed);
  p.scale = std::min(local.uniform_real(ranges.scale_min, ranges.scale_max), fit_scale);
  p.width = std::max(1, static_cast<int>(std::lround(p.scale * background.width())));
  p.height = std::max(1, static_cast<int>(std::lround(p.width * aspect)));
  p.width = std::min(p.width, background.width());
  p.height = std::min(p.height, background.height());
  p.x = local.uniform_int(0, background.width() - p.width);
  p.y = local.uniform_int(0, background.height() - p.height);
  p.brightness = local.uniform_real(ranges.brightness_min, ranges.brightness_max);
  p.sharpness = local.uniform_real(ranges.sharpness_min, ranges.sharpness_max);
  return {composite_popup(background, asset, p), p};
}

InjectedTree inject_popup_ax(const obs::AXTree& page, const obs::AXTree& popup, Rng& rng) {
  InjectedTree out;
  if (popup.empty()) {
    out.tree = page;
    for (std::size_t i = 0; i < page.size(); ++i) out.page_ids.push_back(static_cast<int>(i));
    return out;
  }
  std::vector<std::size_t> slots;  // insertion positions in page.nodes
  if (!page.empty()) {
    for (std::size_t i = 1; i < page.size(); ++i) {
      if (page.nodes[i].depth == 1) slots.push_back(i);
    }
    slots.push_back(page.size());
  }
  const std::size_t pos = slots.empty() ? 0 : slots[rng.uniform_index(slots.size())];
  out.slot = static_cast<int>(std::find(slots.begin(), slots.end(), pos) - slots.begin());
  const int base_depth = page.empty() ? 0 : 1 - popup.nodes.front().depth;

  out.page_ids.resize(page.size());
  out.popup_ids.resize(popup.size());
  for (std::size_t i = 0; i < pos; ++i) {
    out.page_ids[i] = static_cast<int>(out.tree.nodes.size());
    out.tree.nodes.push_back(page.nodes[i]);
  }
  for (std::size_t i = 0; i < popup.size(); ++i) {
    obs::AXNode n = popup.nodes[i];
    n.depth += base_depth;
    n.backend_id = -static_cast<std::int64_t>(i) - 1;
    n.bbox.reset();
    out.popup_ids[i] = static_cast<int>(out.tree.nodes.size());
    out.tree.nodes.push_back(std::move(n));
  }
  for (std::size_t i = pos; i < page.size(); ++i) {
    out.page_ids[i] = static_cast<int>(out.tree.nodes.size());
    out.tree.nodes.push_back(page.nodes[i]);
  }
  obs::renumber(out.tree);
  return out;
}

std::vector<std::vector<int>> enumerate_close_subsets(std::size_t n) {
  if (n == 0) throw Error(Errc::InvalidArgument, "at least one close method is required");
  if (n > 10) throw Error(Errc::TooManyMethods, std::to_string(n) + " close methods exceed the limit of 10");
  std::vector<std::vector<int>> out;
  out.reserve((std::size_t{1} << n) - 1);
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    std::vector<int> subset;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) subset.push_back(static_cast<int>(i));
    }
    out.push_back(std::move(subset));
  }
  return out;
}

namespace {

std::size_t popup_index(const PopupAsset& asset, int element) {
  for (std::size_t i = 0; i < asset.ax.size(); ++i) {
    if (asset.ax.nodes[i].id == element) return i;
  }
  throw Error(Errc::InvalidArgument, "close method refers to missing node");
}

}  // namespace

agent::Trajectory build_noisy_trajectory(const agent::Trajectory& traj, const PopupAsset& asset, int t, Rng& rng,
                                         const JitterRanges& ranges) {
  if (t < 1 || t > static_cast<int>(traj.steps.size())) {
    throw Error(Errc::StepOutOfRange,
                "step " + std::to_string(t) + " outside 1.." + std::to_string(traj.steps.size()));
  }
  asset.validate();
  agent::Trajectory out = traj;
  const agent::Step& original = traj.steps[static_cast<std::size_t>(t - 1)];

  auto [image, placement] = composite_popup(original.observation.screenshot, asset, rng, ranges);
  auto merged = inject_popup_ax(original.observation.ax, asset.ax, rng);
  const auto& method = asset.close_methods[rng.uniform_index(asset.close_methods.size())];
  const int target = merged.popup_ids[popup_index(asset, method.element)];

  agent::Step dismiss;
  dismiss.observation = original.observation;
  dismiss.observation.screenshot = std::move(image);
  dismiss.observation.ax = std::move(merged.tree);
  dismiss.observation.ax_text = obs::serialize_ax(dismiss.observation.ax);
  dismiss.observation.step = t;
  if (method.action == "dbclick") {
    dismiss.action = agent::DbClick{target};
  } else {
    dismiss.action = agent::Click{target};
  }
  const auto* node = dismiss.observation.ax.find(target);
  const std::string what = node ? node->role + " '" + node->name + "'" : "the close control";
  dismiss.thought.sections = {
      "A popup window covers part of the page.",
      "The popup can be dismissed with " + what + " [" + std::to_string(target) + "].",
      traj.query,
      "Close the popup first, then continue with the task.",
      "The popup blocks the elements needed for the task, so it has to be closed before anything else.",
      agent::format_action(dismiss.action)};
  dismiss.thought.has_final_section = true;
  dismiss.raw_output = agent::render_thought(dismiss.thought);
  dismiss.thought.raw = dismiss.raw_output;

  out.steps.insert(out.steps.begin() + (t - 1), std::move(dismiss));
  for (std::size_t i = static_cast<std::size_t>(t); i < out.steps.size(); ++i) {
    out.steps[i].observation.step = static_cast<int>(i) + 1;
  }
  if (out.final_observation && out.final_observation->step >= t) ++out.final_observation->step;
  return out;
}

tasks::TaskInstance gen_popup_close(const std::string& id, const Image& background, const obs::AXTree& page_ax,
                                    const PopupAsset& asset, Rng& rng, tasks::ImageSink& sink,
                                    const JitterRanges& ranges) {
  asset.validate();
  auto [image, placement] = composite_popup(background, asset, rng, ranges);
  auto merged = inject_popup_ax(page_ax, asset.ax, rng);
  std::vector<std::string> labels;
  json methods = json::array();
  for (const auto& m : asset.close_methods) {
    const int merged_id = merged.popup_ids[popup_index(asset, m.element)];
    labels.push_back(std::to_string(merged_id));
    methods.push_back({{"element", merged_id}, {"action", m.action}, {"label", m.label}});
  }
  json subsets = json::array();
  for (const auto& subset : enumerate_close_subsets(labels.size())) {
    json s = json::array();
    for (int i : subset) s.push_back(labels[static_cast<std::size_t>(i)]);
    subsets.push_back(std::move(s));
  }
  tasks::TaskInstance t;
  t.task_id = "popup_close-" + id;
  t.family = "popup_close";
  t.knowledge = "procedural";
  t.metric = "accuracy";
  t.images = {sink.put(image)};
  t.prompt = tasks::family_prompt("popup_close") +
             " Use the element ids from the accessibility tree.\nAccessibility tree:\n" + obs::serialize_ax(merged.tree);
  t.gold = {"strategy_set", subsets};
  t.source = {{"kind", "popup_synth"}, {"asset", asset.name}, {"placement", to_json(placement)},
              {"slot", merged.slot}, {"methods", methods}, {"prompt_pack", tasks::kPromptPackVersion}};
  return t;
}

std::vector<tasks::TaskInstance> synthesize(const std::vector<fs::path>& asset_dirs,
                                            const std::vector<fs::path>& backgrounds, const fs::path& out,
                                            const SynthOptions& options) {
  std::vector<PopupAsset> assets;
  for (const auto& d : asset_dirs) assets.push_back(PopupAsset::load(d));
  std::sort(assets.begin(), assets.end(), [](const PopupAsset& a, const PopupAsset& b) { return a.name < b.name; });
  auto bgs = backgrounds;
  std::sort(bgs.begin(), bgs.end());
  tasks::ImageSink sink(out);
  std::vector<tasks::TaskInstance> result;
  for (const auto& bg_path : bgs) {
    const Image bg = read_png(bg_path);
    obs::AXTree page_ax;
    fs::path ax_path = bg_path;
    ax_path.replace_extension(".ax.txt");
    if (fs::exists(ax_path)) {
      page_ax = obs::parse_ax_text(read_text_file(ax_path));
    } else {
      page_ax.nodes.push_back({0, "RootWebArea", "", "", {}, 0, std::nullopt, 0});
    }
    for (const auto& asset : assets) {
      for (int k = 0; k < options.per_background; ++k) {
        const std::string key = bg_path.stem().string() + "-" + asset.name + "-" + std::to_string(k);
        Rng rng(derive_seed(options.seed, key));
        try {
          result.push_back(gen_popup_close(key, bg, page_ax, asset, rng, sink, options.ranges));
        } catch (const Error& e) {
          log_event("warn", "popup synthesis skipped", {{"key", key}, {"error", e.what()}});
        }
      }
    }
  }
  write_text_file(out / "manifest.jsonl", tasks::manifest_jsonl(result));
  return result;
}

}  // namespace cogweb::popup
