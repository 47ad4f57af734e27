#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cogweb/agent/runtime.hpp"
#include "cogweb/image.hpp"
#include "cogweb/observation/ax_tree.hpp"
#include "cogweb/taskgen/generate.hpp"

namespace cogweb::popup {

struct CloseMethod {
  int element = 0;  // node id inside the popup's AX fragment
  std::string action = "click";  // click or dbclick
  std::string label;

  friend bool operator==(const CloseMethod&, const CloseMethod&) = default;
};

struct PopupAsset {
  std::string name;
  Image image;  // RGBA
  obs::AXTree ax;
  std::vector<CloseMethod> close_methods;

  // Throws InvalidArgument when close_methods is empty or refers to a
  // missing node.
  void validate() const;
  // Directory with popup.png, ax.txt and close.json.
  static PopupAsset load(const std::filesystem::path& dir);
  void save(const std::filesystem::path& dir) const;
};

struct JitterRanges {
  double scale_min = 0.25;  // popup width as a fraction of background width
  double scale_max = 0.60;
  double brightness_min = 0.7;
  double brightness_max = 1.1;
  double sharpness_min = 0.6;
  double sharpness_max = 1.4;
};

struct Placement {
  double scale = 0.5;
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
  double brightness = 1.0;
  double sharpness = 1.0;
  std::uint64_t rng_seed = 0;

  Rect rect() const { return {x, y, width, height}; }
};

json to_json(const Placement& p);

// Brightness scales RGB; sharpness blends with a 3x3 smoothing of the image
// (edge pixels keep their value), factors above 1 sharpen.
Image adjust_brightness(const Image& img, double factor);
Image adjust_sharpness(const Image& img, double factor);
Image resize_bilinear(const Image& img, int width, int height);
// Source-over blend of `src` at (x, y); fully transparent pixels leave dst untouched.
void alpha_over(Image& dst, const Image& src, int x, int y);

// Samples a placement (size, position, background jitter) and composites.
// Throws AssetTooLarge if the popup cannot fit even at the minimum scale.
std::pair<Image, Placement> composite_popup(const Image& background, const PopupAsset& asset, Rng& rng,
                                            const JitterRanges& ranges = {});
// Composites with a fixed placement; the popup rectangle must lie inside the background.
Image composite_popup(const Image& background, const PopupAsset& asset, const Placement& placement);

struct InjectedTree {
  obs::AXTree tree;
  std::vector<int> popup_ids;  // popup node i -> id in the merged tree
  std::vector<int> page_ids;   // page node i -> id in the merged tree
  int slot = 0;
};

// Inserts the popup fragment as a child of the page root at a uniformly
// chosen slot among the root's children, then renumbers every node.
// Popup nodes get synthetic negative backend ids.
InjectedTree inject_popup_ax(const obs::AXTree& page, const obs::AXTree& popup, Rng& rng);

// All nonempty subsets of {0..n-1} in ascending bitmask order.
// Throws TooManyMethods for n > 10 and InvalidArgument for n == 0.
std::vector<std::vector<int>> enumerate_close_subsets(std::size_t n);

// Replaces the observation at step t (1-based) with a popup-obstructed one,
// inserts a dismiss step there using one of the asset's close methods, and
// shifts the original step t and later steps back by one.
agent::Trajectory build_noisy_trajectory(const agent::Trajectory& traj, const PopupAsset& asset, int t, Rng& rng,
                                         const JitterRanges& ranges = {});

// Popup-close task over a composited background. Gold is every nonempty
// subset of the method labels.
tasks::TaskInstance gen_popup_close(const std::string& id, const Image& background, const obs::AXTree& page_ax,
                                    const PopupAsset& asset, Rng& rng, tasks::ImageSink& sink,
                                    const JitterRanges& ranges = {});

struct SynthOptions {
  std::uint64_t seed = 7;
  int per_background = 1;
  JitterRanges ranges;
};

// Every asset over every background (PNG files, optional sibling .ax.txt);
// writes <out>/manifest.jsonl and images.
std::vector<tasks::TaskInstance> synthesize(const std::vector<std::filesystem::path>& asset_dirs,
                                            const std::vector<std::filesystem::path>& backgrounds,
                                            const std::filesystem::path& out, const SynthOptions& options);

}  // namespace cogweb::popup
