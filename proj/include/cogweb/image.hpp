#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cogweb {

struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  bool empty() const { return w <= 0 || h <= 0; }
  int right() const { return x + w; }
  int bottom() const { return y + h; }
  bool contains(int px, int py) const {
    return px >= x && py >= y && px < right() && py < bottom();
  }
  Rect intersect(const Rect& o) const;
  Rect inflate(int pad) const { return {x - pad, y - pad, w + 2 * pad, h + 2 * pad}; }
  std::pair<int, int> center() const { return {x + w / 2, y + h / 2}; }

  friend bool operator==(const Rect&, const Rect&) = default;
};

struct Rgba {
  std::uint8_t r = 0, g = 0, b = 0, a = 255;
  friend bool operator==(const Rgba&, const Rgba&) = default;
};

// Row-major 8-bit RGBA raster.
class Image {
 public:
  Image() = default;
  Image(int width, int height, Rgba fill = {255, 255, 255, 255});

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return width_ == 0 || height_ == 0; }
  Rect bounds() const { return {0, 0, width_, height_}; }

  Rgba at(int x, int y) const;
  void set(int x, int y, Rgba c);
  void fill_rect(const Rect& r, Rgba c);

  std::span<const std::uint8_t> bytes() const { return pixels_; }
  std::span<std::uint8_t> bytes() { return pixels_; }

  Image crop(const Rect& r) const;

  // 64-bit FNV-1a over dimensions and pixels, hex-encoded.
  std::string content_hash() const;

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

std::vector<std::uint8_t> encode_png(const Image& img);
Image decode_png(std::span<const std::uint8_t> data);

void write_png(const Image& img, const std::filesystem::path& path);
Image read_png(const std::filesystem::path& path);

// Number of pixels whose RGBA value differs.
std::size_t count_differing_pixels(const Image& a, const Image& b);

}  // namespace cogweb
