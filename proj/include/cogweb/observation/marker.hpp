#pragma once

#include <span>
#include <string>

#include "cogweb/image.hpp"

namespace cogweb::obs {

struct MarkerStyle {
  Rgba color{255, 0, 0, 255};
  int stroke = 3;
};

// Returns a copy of `img` with an unfilled rectangle drawn inside `box`,
// clipped to the image. Throws BoxOutside when the box misses the image.
Image draw_marker(const Image& img, const Rect& box, const MarkerStyle& style = {});

// In-place variant; a box outside the image draws nothing.
void draw_marker_into(Image& img, const Rect& box, const MarkerStyle& style = {});

struct LabeledBox {
  Rect box;
  char label = 'A';
};

// Markers with an uppercase letter badge in each box's top-left corner.
Image draw_labeled_markers(const Image& img, std::span<const LabeledBox> boxes, const MarkerStyle& style = {});

// Renders an uppercase ASCII string with the built-in 5x7 glyphs.
void draw_text(Image& img, int x, int y, std::string_view text, Rgba color, int scale = 1);

}  // namespace cogweb::obs
