#include "cpvar/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

#include "cpvar/error.hpp"

namespace cpvar::csv {

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      break;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

Table read(std::istream& in, std::string_view expected_header,
           std::string_view what) {
  Table t;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!have_header) {
      if (line != expected_header) {
        throw FormatError(std::string(what) + ": expected header '" +
                          std::string(expected_header) + "', got '" + line +
                          "'");
      }
      t.header = split(line);
      have_header = true;
      continue;
    }
    auto fields = split(line);
    if (fields.size() != t.header.size()) {
      throw FormatError(std::string(what) + " line " + std::to_string(lineno) +
                        ": expected " + std::to_string(t.header.size()) +
                        " fields, got " + std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
    t.lines.push_back(lineno);
  }
  if (!have_header) {
    throw FormatError(std::string(what) + ": missing header");
  }
  return t;
}

double parse_double(std::string_view field, std::string_view what) {
  double x = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, x);
  if (field.empty() || ec != std::errc() || ptr != last || !std::isfinite(x)) {
    throw FormatError("invalid number '" + std::string(field) + "' in " +
                      std::string(what));
  }
  return x;
}

long long parse_int(std::string_view field, std::string_view what) {
  long long x = 0;
  const char* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), last, x);
  if (field.empty() || ec != std::errc() || ptr != last) {
    throw FormatError("invalid integer '" + std::string(field) + "' in " +
                      std::string(what));
  }
  return x;
}

std::string format(double x, int digits) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", digits, x);
  return buf;
}

std::string format_exact(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) return format(x, 17);
  return std::string(buf, ptr);
}

}  // namespace cpvar::csv
