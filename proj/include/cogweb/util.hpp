#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace cogweb {

using json = nlohmann::json;

inline constexpr std::string_view kVersion = "0.3.0";

// Seeded generator with library-defined sampling so streams are identical
// across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, n). n must be > 0.
  std::size_t uniform_index(std::size_t n);
  // Uniform integer in [lo, hi].
  int uniform_int(int lo, int hi);
  // Uniform in [lo, hi).
  double uniform_real(double lo, double hi);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[uniform_index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

// Stable 64-bit seed derived from a base seed and a string key.
std::uint64_t derive_seed(std::uint64_t base, std::string_view key);

std::string base64_encode(std::span<const std::uint8_t> data);
std::vector<std::uint8_t> base64_decode(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
// Trim and collapse runs of whitespace to one space.
std::string collapse_whitespace(std::string_view s);
std::vector<std::string> split_lines(std::string_view s);

// Line-delimited JSON log records on stderr.
void log_event(std::string_view level, std::string_view message, const json& fields = json::object());

}  // namespace cogweb
