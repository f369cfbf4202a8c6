#pragma once

// Locale-independent CSV formatting and parsing of doubles.

#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "coopucb/error.hpp"

namespace coopucb::csv {

/// Shortest representation that parses back to the same double.
inline std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

inline double parse_number(std::string_view text) {
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size())
    throw ValidationError("not a number: '" + std::string(text) + "'");
  return value;
}

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

/// Appends comma-separated fields.
class Row {
 public:
  Row& operator<<(double x) { return append(format_number(x)); }
  Row& operator<<(std::size_t x) { return append(std::to_string(x)); }
  Row& operator<<(int x) { return append(std::to_string(x)); }
  Row& operator<<(std::string_view s) { return append(std::string(s)); }
  Row& operator<<(const char* s) { return append(s); }
  Row& operator<<(bool b) { return append(b ? "true" : "false"); }

  const std::string& str() const noexcept { return text_; }

 private:
  Row& append(const std::string& s) {
    if (!first_) text_ += ',';
    text_ += s;
    first_ = false;
    return *this;
  }
  std::string text_;
  bool first_ = true;
};

}  // namespace coopucb::csv
