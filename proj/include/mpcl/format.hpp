#pragma once

#include "mpcl/numerics.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace mpcl {

// Shortest decimal text that parses back to exactly `v`.
std::string format_double(double v);

// Strict parse of a whole token; throws ParseError (line 0) on junk.
double parse_double(std::string_view text);

// Rows of comma-separated fields with a mandatory header line.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable parse_csv(std::string_view text);

// Column `name` of `table`, or throws ParseError.
std::size_t csv_column(const CsvTable& table, std::string_view name);

}  // namespace mpcl
