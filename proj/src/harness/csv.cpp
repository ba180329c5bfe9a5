#include "mstep/harness/csv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace mstep {

std::string csv_number(double value) {
  if (std::isnan(value)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string csv_number(std::uint64_t value) { return std::to_string(value); }
std::string csv_number(int value) { return std::to_string(value); }

namespace {

std::string escape(const std::string& cell) {
  if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void append_line(std::string& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) out += ',';
    out += escape(cells[i]);
  }
  out += '\n';
}

}  // namespace

std::string CsvTable::to_string() const {
  std::string out;
  append_line(out, header);
  for (const auto& r : rows) append_line(out, r);
  return out;
}

CsvTable CsvTable::sorted() const {
  CsvTable t = *this;
  std::sort(t.rows.begin(), t.rows.end());
  return t;
}

}  // namespace mstep
