#ifndef LENBIAS_DETAIL_UTIL_HPP
#define LENBIAS_DETAIL_UTIL_HPP

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "lenbias/error.hpp"

namespace lenbias::detail {

/// Whole file as lines. CR-LF is normalized to LF; one trailing newline
/// does not produce an empty final line.
inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

inline std::vector<std::string_view> split_tab(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

/// Shortest decimal string that round-trips the double.
inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("to_chars failed");
  return std::string(buf, ptr);
}

inline double parse_double_strict(std::string_view text,
                                  const std::string& context) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ParseError(context + ": expected a number, got '" +
                     std::string(text) + "'");
  return v;
}

inline long parse_long_strict(std::string_view text,
                              const std::string& context) {
  long v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ParseError(context + ": expected an integer, got '" +
                     std::string(text) + "'");
  return v;
}

/// round() pinned to half-away-from-zero (what lround guarantees),
/// wrapped so the convention is named at call sites.
inline long round_half_away(double v) { return std::lround(v); }

}  // namespace lenbias::detail

#endif  // LENBIAS_DETAIL_UTIL_HPP
