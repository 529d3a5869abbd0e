#include "gridres/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>

#include <fmt/core.h>

#include "gridres/error.hpp"

namespace gridres::csv {

namespace {

std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    fields.emplace_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  return s;
}

}  // namespace

std::optional<std::size_t> Table::find_column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t Table::column(std::string_view name) const {
  if (auto c = find_column(name)) return *c;
  throw Error(ErrorCode::parse_error, fmt::format("{}:1: missing column '{}'", source, name));
}

Table read(std::istream& in, std::string source) {
  Table table;
  table.source = std::move(source);
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view = trim(line);
    if (line_no == 1 && view.substr(0, 3) == "\xEF\xBB\xBF") view.remove_prefix(3);
    if (view.empty()) continue;
    if (view.find('"') != std::string_view::npos) {
      throw Error(ErrorCode::parse_error, fmt::format("{}:{}: quoted fields are not supported", table.source, line_no));
    }
    auto fields = split_line(view);
    for (auto& f : fields) f = std::string(trim(f));
    if (!have_header) {
      table.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw Error(ErrorCode::parse_error,
                  fmt::format("{}:{}: expected {} fields, found {}", table.source, line_no,
                              table.header.size(), fields.size()));
    }
    table.rows.push_back(std::move(fields));
    table.line_numbers.push_back(line_no);
  }
  if (!have_header) throw Error(ErrorCode::parse_error, fmt::format("{}: missing header row", table.source));
  return table;
}

Table read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, fmt::format("cannot open {}", path));
  return read(in, path);
}

void fail(const Table& table, std::size_t row, const std::string& what) {
  throw Error(ErrorCode::parse_error, fmt::format("{}:{}: {}", table.source, table.line_numbers.at(row), what));
}

double to_double(const Table& table, std::size_t row, std::size_t col) {
  const std::string& s = table.rows[row][col];
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    fail(table, row, fmt::format("column '{}': '{}' is not a finite number", table.header[col], s));
  }
  return v;
}

std::int64_t to_int(const Table& table, std::size_t row, std::size_t col) {
  const std::string& s = table.rows[row][col];
  std::int64_t v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    fail(table, row, fmt::format("column '{}': '{}' is not an integer", table.header[col], s));
  }
  return v;
}

std::string format_double(double v) { return fmt::format("{}", v); }

std::string format_report(double v) { return fmt::format("{:.4f}", v); }

}  // namespace gridres::csv
