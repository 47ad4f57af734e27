#include "cogweb/util.hpp"

#include <boost/beast/core/detail/base64.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>

#include "cogweb/error.hpp"

namespace cogweb {

std::size_t Rng::uniform_index(std::size_t n) {
  if (n == 0) throw Error(Errc::InvalidArgument, "uniform_index over empty range");
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  std::uint64_t x;
  do {
    x = engine_();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

int Rng::uniform_int(int lo, int hi) {
  if (hi < lo) throw Error(Errc::InvalidArgument, "uniform_int with hi < lo");
  return lo + static_cast<int>(uniform_index(static_cast<std::size_t>(hi - lo) + 1));
}

double Rng::uniform_real(double lo, double hi) {
  const double unit = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * unit;
}

std::uint64_t derive_seed(std::uint64_t base, std::string_view key) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ base;
  for (unsigned char c : key) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  // splitmix64 finalizer
  h += 0x9e3779b97f4a7c15ULL;
  h = (h ^ (h >> 30)) * 0xbf58476d1ce4e5b9ULL;
  h = (h ^ (h >> 27)) * 0x94d049bb133111ebULL;
  return h ^ (h >> 31);
}

std::string base64_encode(std::span<const std::uint8_t> data) {
  namespace b64 = boost::beast::detail::base64;
  std::string out(b64::encoded_size(data.size()), '\0');
  out.resize(b64::encode(out.data(), data.data(), data.size()));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  namespace b64 = boost::beast::detail::base64;
  if (text.size() % 4 != 0) throw Error(Errc::ParseError, "invalid base64 payload");
  std::string_view body = text;
  for (int i = 0; i < 2 && !body.empty() && body.back() == '='; ++i) body.remove_suffix(1);
  std::vector<std::uint8_t> out(b64::decoded_size(text.size()));
  const auto [written, consumed] = b64::decode(out.data(), body.data(), body.size());
  if (consumed != body.size()) throw Error(Errc::ParseError, "invalid base64 payload");
  out.resize(written);
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

namespace {
bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }
}  // namespace

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  bool pending = false;
  for (char c : s) {
    if (is_space(c)) {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(' ');
    pending = false;
    out.push_back(c);
  }
  return out;
}

std::vector<std::string> split_lines(std::string_view s) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto nl = s.find('\n', start);
    if (nl == std::string_view::npos) nl = s.size();
    std::string_view line = s.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.emplace_back(line);
    if (nl == s.size()) break;
    start = nl + 1;
  }
  return lines;
}

namespace {

int level_rank(std::string_view level) {
  if (level == "debug") return 0;
  if (level == "info") return 1;
  if (level == "warn") return 2;
  return 3;
}

int log_threshold() {
  static const int t = [] {
    const char* env = std::getenv("COGWEB_LOG_LEVEL");
    return level_rank(env ? env : "info");
  }();
  return t;
}

}  // namespace

void log_event(std::string_view level, std::string_view message, const json& fields) {
  if (level_rank(level) < log_threshold()) return;
  static std::mutex mu;
  json rec = fields.is_object() ? fields : json::object();
  const auto now = std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
  rec["ts_ms"] = now;
  rec["level"] = level;
  rec["msg"] = message;
  std::lock_guard lock(mu);
  std::cerr << rec.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
}

}  // namespace cogweb
