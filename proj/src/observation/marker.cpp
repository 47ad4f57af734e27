#include "cogweb/observation/marker.hpp"

#include <algorithm>
#include <array>
#include <cstdint>

#include "cogweb/error.hpp"

namespace cogweb::obs {

namespace {

// 5x7 glyphs for A-Z, one row per byte, bit 4 is the leftmost column.
constexpr std::array<std::array<std::uint8_t, 7>, 26> kGlyphs = {{
    {0x0E, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11},  // A
    {0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E},  // B
    {0x0E, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0E},  // C
    {0x1E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x1E},  // D
    {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x1F},  // E
    {0x1F, 0x10, 0x10, 0x1E, 0x10, 0x10, 0x10},  // F
    {0x0E, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0F},  // G
    {0x11, 0x11, 0x11, 0x1F, 0x11, 0x11, 0x11},  // H
    {0x0E, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E},  // I
    {0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0C},  // J
    {0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11},  // K
    {0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1F},  // L
    {0x11, 0x1B, 0x15, 0x15, 0x11, 0x11, 0x11},  // M
    {0x11, 0x11, 0x19, 0x15, 0x13, 0x11, 0x11},  // N
    {0x0E, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E},  // O
    {0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10, 0x10},  // P
    {0x0E, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0D},  // Q
    {0x1E, 0x11, 0x11, 0x1E, 0x14, 0x12, 0x11},  // R
    {0x0F, 0x10, 0x10, 0x0E, 0x01, 0x01, 0x1E},  // S
    {0x1F, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04},  // T
    {0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0E},  // U
    {0x11, 0x11, 0x11, 0x11, 0x11, 0x0A, 0x04},  // V
    {0x11, 0x11, 0x11, 0x15, 0x15, 0x15, 0x0A},  // W
    {0x11, 0x11, 0x0A, 0x04, 0x0A, 0x11, 0x11},  // X
    {0x11, 0x11, 0x0A, 0x04, 0x04, 0x04, 0x04},  // Y
    {0x1F, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1F},  // Z
}};

}  // namespace

void draw_marker_into(Image& img, const Rect& box, const MarkerStyle& style) {
  const Rect clip = box.intersect(img.bounds());
  if (clip.empty()) return;
  for (int y = clip.y; y < clip.bottom(); ++y) {
    for (int x = clip.x; x < clip.right(); ++x) {
      const int edge = std::min({x - box.x, box.right() - 1 - x, y - box.y, box.bottom() - 1 - y});
      if (edge < style.stroke) img.set(x, y, style.color);
    }
  }
}

Image draw_marker(const Image& img, const Rect& box, const MarkerStyle& style) {
  if (box.intersect(img.bounds()).empty()) {
    throw Error(Errc::BoxOutside, "marker box (" + std::to_string(box.x) + "," + std::to_string(box.y) + "," +
                                      std::to_string(box.w) + "," + std::to_string(box.h) + ") misses the image");
  }
  Image out = img;
  draw_marker_into(out, box, style);
  return out;
}

void draw_text(Image& img, int x, int y, std::string_view text, Rgba color, int scale) {
  int pen = x;
  for (char ch : text) {
    if (ch >= 'A' && ch <= 'Z') {
      const auto& g = kGlyphs[static_cast<std::size_t>(ch - 'A')];
      for (int row = 0; row < 7; ++row) {
        for (int col = 0; col < 5; ++col) {
          if (g[static_cast<std::size_t>(row)] & (0x10 >> col)) {
            img.fill_rect({pen + col * scale, y + row * scale, scale, scale}, color);
          }
        }
      }
    }
    pen += 6 * scale;
  }
}

Image draw_labeled_markers(const Image& img, std::span<const LabeledBox> boxes, const MarkerStyle& style) {
  Image out = img;
  for (const auto& b : boxes) {
    if (b.box.intersect(img.bounds()).empty()) {
      throw Error(Errc::BoxOutside, std::string("candidate ") + b.label + " lies outside the image");
    }
    draw_marker_into(out, b.box, style);
    const Rect badge{b.box.x, b.box.y, 5 * 2 + 4, 7 * 2 + 4};
    out.fill_rect(badge, style.color);
    draw_text(out, badge.x + 2, badge.y + 2, std::string(1, b.label), {255, 255, 255, 255}, 2);
  }
  return out;
}

}  // namespace cogweb::obs
