#include "cogweb/image.hpp"

#include <png.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include "cogweb/error.hpp"

namespace cogweb {

Rect Rect::intersect(const Rect& o) const {
  const int l = std::max(x, o.x);
  const int t = std::max(y, o.y);
  const int r = std::min(right(), o.right());
  const int b = std::min(bottom(), o.bottom());
  if (r <= l || b <= t) return {l, t, 0, 0};
  return {l, t, r - l, b - t};
}

Image::Image(int width, int height, Rgba fill) : width_(width), height_(height) {
  if (width < 0 || height < 0) {
    throw Error(Errc::InvalidArgument, "negative image dimensions");
  }
  pixels_.resize(static_cast<std::size_t>(width) * height * 4);
  for (std::size_t i = 0; i < pixels_.size(); i += 4) {
    pixels_[i] = fill.r;
    pixels_[i + 1] = fill.g;
    pixels_[i + 2] = fill.b;
    pixels_[i + 3] = fill.a;
  }
}

Rgba Image::at(int x, int y) const {
  const auto* p = &pixels_[(static_cast<std::size_t>(y) * width_ + x) * 4];
  return {p[0], p[1], p[2], p[3]};
}

void Image::set(int x, int y, Rgba c) {
  auto* p = &pixels_[(static_cast<std::size_t>(y) * width_ + x) * 4];
  p[0] = c.r;
  p[1] = c.g;
  p[2] = c.b;
  p[3] = c.a;
}

void Image::fill_rect(const Rect& r, Rgba c) {
  const Rect clip = r.intersect(bounds());
  for (int y = clip.y; y < clip.bottom(); ++y) {
    for (int x = clip.x; x < clip.right(); ++x) set(x, y, c);
  }
}

Image Image::crop(const Rect& r) const {
  const Rect clip = r.intersect(bounds());
  Image out(std::max(clip.w, 0), std::max(clip.h, 0));
  for (int y = 0; y < clip.h; ++y) {
    const auto* src = &pixels_[(static_cast<std::size_t>(clip.y + y) * width_ + clip.x) * 4];
    std::memcpy(&out.pixels_[static_cast<std::size_t>(y) * clip.w * 4], src,
                static_cast<std::size_t>(clip.w) * 4);
  }
  return out;
}

std::string Image::content_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint8_t b) {
    h ^= b;
    h *= 0x100000001b3ULL;
  };
  for (int shift = 0; shift < 32; shift += 8) mix(static_cast<std::uint8_t>(width_ >> shift));
  for (int shift = 0; shift < 32; shift += 8) mix(static_cast<std::uint8_t>(height_ >> shift));
  for (auto b : pixels_) mix(b);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

namespace {

void png_write_to_vector(png_structp png, png_bytep data, png_size_t len) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + len);
}

struct ReadCursor {
  std::span<const std::uint8_t> data;
  std::size_t pos = 0;
};

void png_read_from_span(png_structp png, png_bytep out, png_size_t len) {
  auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cur->pos + len > cur->data.size()) png_error(png, "truncated png");
  std::memcpy(out, cur->data.data() + cur->pos, len);
  cur->pos += len;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const Image& img) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error(Errc::Io, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  std::vector<std::uint8_t> out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(Errc::Io, "png encode failed");
  }
  png_set_write_fn(png, &out, png_write_to_vector, nullptr);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()), static_cast<png_uint_32>(img.height()), 8,
               PNG_COLOR_TYPE_RGBA, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_set_compression_level(png, 6);
  png_write_info(png, info);
  const auto bytes = img.bytes();
  for (int y = 0; y < img.height(); ++y) {
    png_write_row(png, const_cast<png_bytep>(bytes.data() + static_cast<std::size_t>(y) * img.width() * 4));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return out;
}

Image decode_png(std::span<const std::uint8_t> data) {
  if (data.size() < 8 || png_sig_cmp(data.data(), 0, 8) != 0) {
    throw Error(Errc::Io, "not a png stream");
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw Error(Errc::Io, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  ReadCursor cursor{data, 0};
  Image img;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(Errc::Io, "png decode failed");
  }
  png_set_read_fn(png, &cursor, png_read_from_span);
  png_read_info(png, info);
  const auto width = static_cast<int>(png_get_image_width(png, info));
  const auto height = static_cast<int>(png_get_image_height(png, info));
  const auto color = png_get_color_type(png, info);
  const auto depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_PALETTE) {
    png_set_filler(png, 0xFF, PNG_FILLER_AFTER);
  }
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  png_read_update_info(png, info);

  img = Image(width, height);
  auto bytes = img.bytes();
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) rows[y] = bytes.data() + static_cast<std::size_t>(y) * width * 4;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_png(const Image& img, const std::filesystem::path& path) {
  const auto data = encode_png(img);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

Image read_png(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_png(data);
}

std::size_t count_differing_pixels(const Image& a, const Image& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw Error(Errc::InvalidArgument, "image dimensions differ");
  }
  std::size_t n = 0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      if (!(a.at(x, y) == b.at(x, y))) ++n;
    }
  }
  return n;
}

}  // namespace cogweb
