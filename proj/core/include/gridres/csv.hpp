#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gridres::csv {

/// Parsed comma-separated table with a header row. Fields are not quoted in
/// any of the formats gridres reads or writes; a quoted field is rejected.
struct Table {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  ///< 1-based source line per row

  std::optional<std::size_t> find_column(std::string_view name) const;
  std::size_t column(std::string_view name) const;  ///< throws parse_error if absent
};

Table read(std::istream& in, std::string source);
Table read_file(const std::string& path);

[[noreturn]] void fail(const Table& table, std::size_t row, const std::string& what);

double to_double(const Table& table, std::size_t row, std::size_t col);
std::int64_t to_int(const Table& table, std::size_t row, std::size_t col);

/// Shortest round-trip representation of a double.
std::string format_double(double v);
/// Fixed four-decimal representation used in reports.
std::string format_report(double v);

}  // namespace gridres::csv
