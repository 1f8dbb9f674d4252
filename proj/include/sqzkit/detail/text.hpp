#pragma once

#include <charconv>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "sqzkit/errors.hpp"

namespace sqzkit::detail {

inline std::string_view trim(std::string_view s) {
  const char* ws = " \t\r\n";
  const auto first = s.find_first_not_of(ws);
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(ws);
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

// Parses one numeric cell, requiring the whole (trimmed) field to be consumed
// so stray units or garbage are caught rather than silently truncated.
inline double parse_number(std::string_view field, std::size_t line_number) {
  const std::string_view cell = trim(field);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc{} || ptr != cell.data() + cell.size() || cell.empty()) {
    throw parse_error("expected a number, got '" + std::string(cell) + "'",
                      line_number);
  }
  return value;
}

// Shortest decimal form with 9 significant digits, locale-independent.
inline std::string format_sig9(double value) {
  char buf[40];
  const auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 9);
  return std::string(buf, ptr);
}

}  // namespace sqzkit::detail
