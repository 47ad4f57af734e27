#include <gtest/gtest.h>

#include <numeric>
#include <set>

#include "cogweb/error.hpp"
#include "cogweb/image.hpp"
#include "cogweb/taskgen/families.hpp"
#include "cogweb/util.hpp"
#include "mock_model.hpp"

using namespace cogweb;

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) ASSERT_EQ(a.next(), b.next());
}

TEST(Rng, UniformIndexStaysInRange) {
  Rng r(1);
  std::set<std::size_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const auto v = r.uniform_index(7);
    ASSERT_LT(v, 7u);
    seen.insert(v);
  }
  EXPECT_EQ(seen.size(), 7u);
  for (int i = 0; i < 1000; ++i) {
    const int v = r.uniform_int(-3, 3);
    ASSERT_GE(v, -3);
    ASSERT_LE(v, 3);
    const double d = r.uniform_real(0.25, 0.6);
    ASSERT_GE(d, 0.25);
    ASSERT_LT(d, 0.6);
  }
}

TEST(Rng, ShuffleIsPermutation) {
  Rng r(9);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  auto w = v;
  r.shuffle(w);
  EXPECT_NE(v, w);
  std::sort(w.begin(), w.end());
  EXPECT_EQ(v, w);
}

TEST(DeriveSeed, StableAndKeySensitive) {
  EXPECT_EQ(derive_seed(7, "a/b"), derive_seed(7, "a/b"));
  EXPECT_NE(derive_seed(7, "a/b"), derive_seed(7, "a/c"));
  EXPECT_NE(derive_seed(7, "a/b"), derive_seed(8, "a/b"));
}

TEST(Base64, Rfc4648Vectors) {
  const std::vector<std::pair<std::string, std::string>> cases = {
      {"", ""}, {"f", "Zg=="}, {"fo", "Zm8="}, {"foo", "Zm9v"}, {"foob", "Zm9vYg=="}, {"fooba", "Zm9vYmE="},
      {"foobar", "Zm9vYmFy"}};
  for (const auto& [plain, enc] : cases) {
    std::vector<std::uint8_t> bytes(plain.begin(), plain.end());
    EXPECT_EQ(base64_encode(bytes), enc);
    EXPECT_EQ(base64_decode(enc), bytes);
  }
}

TEST(Strings, TrimAndCollapse) {
  EXPECT_EQ(trim("  a b \n"), "a b");
  EXPECT_EQ(collapse_whitespace(" a \t\n b  c "), "a b c");
  EXPECT_EQ(to_lower("AbC"), "abc");
  EXPECT_EQ(split_lines("a\nb\r\nc").size(), 3u);
}

TEST(Image, PngRoundTrip) {
  Image img(17, 9, {10, 20, 30, 255});
  img.set(3, 4, {255, 0, 0, 128});
  img.fill_rect({5, 1, 4, 3}, {0, 200, 0, 255});
  const Image back = decode_png(encode_png(img));
  EXPECT_EQ(back, img);
  EXPECT_EQ(back.content_hash(), img.content_hash());
}

TEST(Image, CropAndDiff) {
  Image img(10, 10);
  img.fill_rect({2, 2, 3, 3}, {0, 0, 0, 255});
  const Image c = img.crop({2, 2, 3, 3});
  EXPECT_EQ(c.width(), 3);
  EXPECT_EQ(c.at(1, 1), (Rgba{0, 0, 0, 255}));
  Image other = img;
  other.set(0, 0, {1, 1, 1, 255});
  EXPECT_EQ(count_differing_pixels(img, other), 1u);
  EXPECT_NE(img.content_hash(), other.content_hash());
}

TEST(Rect, IntersectAndInflate) {
  const Rect a{0, 0, 10, 10};
  EXPECT_EQ(a.intersect({5, 5, 10, 10}), (Rect{5, 5, 5, 5}));
  EXPECT_TRUE(a.intersect({20, 20, 5, 5}).empty());
  EXPECT_EQ(a.inflate(2), (Rect{-2, -2, 14, 14}));
}

TEST(Error, MessageCarriesCodeName) {
  const Error e(Errc::StaleTarget, "node 4");
  EXPECT_EQ(e.code(), Errc::StaleTarget);
  EXPECT_STREQ(e.what(), "StaleTarget: node 4");
}

TEST(Families, TablesAreConsistent) {
  using namespace cogweb::tasks;
  EXPECT_EQ(families().size(), 12u);
  EXPECT_EQ(bench_families().size(), 8u);
  int total = 0;
  for (const auto* f : bench_families()) total += f->bench->count;
  EXPECT_EQ(total, 876);
  ASSERT_NE(find_family("popup_close"), nullptr);
  EXPECT_EQ(find_family("popup_close")->knowledge, Knowledge::Procedural);
  EXPECT_EQ(find_family("nope"), nullptr);
  EXPECT_EQ(find_family("single_step_web_task")->title, "Single Step Exploration");
}

TEST(Files, TextRoundTrip) {
  const auto dir = cogweb::testing::scratch_dir("util");
  write_text_file(dir / "a" / "b.txt", "hello\n");
  EXPECT_EQ(read_text_file(dir / "a" / "b.txt"), "hello\n");
  EXPECT_THROW(read_text_file(dir / "missing.txt"), Error);
}
