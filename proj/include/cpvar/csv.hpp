// Minimal comma-separated reader/writer for the cpvar file formats.
#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace cpvar::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  // 1-based line number of each row in the source, for error messages.
  std::vector<std::size_t> lines;
};

// Reads a header line plus data rows. Blank lines are skipped, a trailing
// '\r' is stripped. Throws FormatError when the header differs from
// `expected_header` or a row has the wrong number of fields.
Table read(std::istream& in, std::string_view expected_header,
           std::string_view what);

std::vector<std::string> split(std::string_view line);

// Parses a decimal number with '.' separator; the whole field must be used.
double parse_double(std::string_view field, std::string_view what);
long long parse_int(std::string_view field, std::string_view what);

// Shortest form with `digits` significant digits ("%.*g"); inf is "inf".
std::string format(double x, int digits = 9);
// Shortest representation that reads back bit-identically.
std::string format_exact(double x);

}  // namespace cpvar::csv
