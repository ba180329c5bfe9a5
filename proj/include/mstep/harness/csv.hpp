#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mstep {

// %.17g; NaN becomes an empty cell.
std::string csv_number(double value);
std::string csv_number(std::uint64_t value);
std::string csv_number(int value);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_string() const;
  // Rows sorted lexicographically (used to compare tables up to row order).
  CsvTable sorted() const;
};

}  // namespace mstep
