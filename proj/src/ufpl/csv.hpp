#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace ufpl::csv {

// Shortest representation that round-trips; stable across runs.
std::string format_number(double value);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column; throws Error(kIo) naming the column if absent.
  std::size_t column(std::string_view name) const;
};

// Comma-separated, mandatory header row, no quoting. Blank lines skipped.
Table read(std::istream& in);

double parse_number(std::string_view text, std::string_view context);

void write_row(std::ostream& out, const std::vector<std::string>& cells);

}  // namespace ufpl::csv
