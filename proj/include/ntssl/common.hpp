#pragma once

#include <array>
#include <charconv>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace ntssl {

using Bytes = std::vector<std::uint8_t>;

// Base of every error the library throws. `code()` maps onto the CLI exit codes.
class Error : public std::runtime_error {
 public:
  enum class Category { usage = 1, data = 2, pipeline = 3 };

  Error(Category category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  Category category() const noexcept { return category_; }
  int code() const noexcept { return static_cast<int>(category_); }

 private:
  Category category_;
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(Category::data, what) {}
};

class PipelineError : public Error {
 public:
  explicit PipelineError(const std::string& what) : Error(Category::pipeline, what) {}
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(Category::usage, what) {}
};

namespace detail {

inline int hex_nibble(char c) noexcept {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace detail

// 32-byte identifier (transaction hash / txid). Hex form is the plain byte
// order, not the reversed display order some wallets use.
struct Hash32 {
  std::array<std::uint8_t, 32> bytes{};

  static std::optional<Hash32> from_hex(std::string_view hex) {
    if (hex.size() != 64) return std::nullopt;
    Hash32 h;
    for (std::size_t i = 0; i < 32; ++i) {
      const int hi = detail::hex_nibble(hex[2 * i]);
      const int lo = detail::hex_nibble(hex[2 * i + 1]);
      if (hi < 0 || lo < 0) return std::nullopt;
      h.bytes[i] = static_cast<std::uint8_t>(hi << 4 | lo);
    }
    return h;
  }

  std::string hex() const {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(64, '0');
    for (std::size_t i = 0; i < 32; ++i) {
      out[2 * i] = digits[bytes[i] >> 4];
      out[2 * i + 1] = digits[bytes[i] & 0xF];
    }
    return out;
  }

  auto operator<=>(const Hash32&) const = default;
};

struct Hash32Hasher {
  std::size_t operator()(const Hash32& h) const noexcept {
    std::size_t v = 0;
    for (std::size_t i = 0; i < sizeof(std::size_t); ++i) v = v << 8 | h.bytes[i];
    return v;
  }
};

// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<std::uint64_t> parse_u64(std::string_view s) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || res.ec != std::errc{} || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

// Parses `key=value key=value ...` records. Returns nullopt on a token without '='.
inline std::optional<std::vector<std::pair<std::string_view, std::string_view>>> parse_fields(
    std::string_view line) {
  std::vector<std::pair<std::string_view, std::string_view>> fields;
  for (auto token : split(trim(line), ' ')) {
    if (token.empty()) continue;
    const auto eq = token.find('=');
    if (eq == std::string_view::npos || eq == 0) return std::nullopt;
    fields.emplace_back(token.substr(0, eq), token.substr(eq + 1));
  }
  return fields;
}

}  // namespace ntssl
