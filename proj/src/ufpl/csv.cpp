#include "ufpl/csv.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "ufpl/errors.hpp"

namespace ufpl::csv {

std::string format_number(double value) {
  if (value == 0.0) return "0";  // also folds -0
  return fmt::format("{}", value);
}

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw Error(ErrorCode::kIo, fmt::format("csv: missing column '{}'", name));
}

namespace {

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    auto cell = line.substr(start, comma == std::string_view::npos
                                       ? std::string_view::npos
                                       : comma - start);
    while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t'))
      cell.remove_prefix(1);
    while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' ||
                             cell.back() == '\r'))
      cell.remove_suffix(1);
    cells.emplace_back(cell);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

}  // namespace

Table read(std::istream& in) {
  Table table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split(line);
    if (!have_header) {
      table.header = std::move(cells);
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size()) {
      throw Error(ErrorCode::kIo,
                  fmt::format("csv line {}: expected {} cells, found {}",
                              line_no, table.header.size(), cells.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  if (!have_header) throw Error(ErrorCode::kIo, "csv: missing header row");
  return table;
}

double parse_number(std::string_view text, std::string_view context) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() ||
      !std::isfinite(value)) {
    throw Error(ErrorCode::kIo,
                fmt::format("{}: '{}' is not a finite number", context, text));
  }
  return value;
}

void write_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    out << cells[i];
  }
  out << '\n';
}

}  // namespace ufpl::csv
