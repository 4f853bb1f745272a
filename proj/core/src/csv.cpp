#include "hetnet/csv.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "hetnet/error.hpp"

namespace hetnet {

std::string format_double(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void CsvWriter::separator() {
  if (row_open_) out_ << ',';
  row_open_ = true;
}

void CsvWriter::header(std::span<const std::string> names) {
  for (const auto& n : names) field(std::string_view(n));
  end_row();
}

void CsvWriter::field(double value) {
  separator();
  out_ << format_double(value);
}

void CsvWriter::field(long value) {
  separator();
  out_ << value;
}

void CsvWriter::field(std::string_view value) {
  separator();
  out_ << value;
}

void CsvWriter::end_row() {
  out_ << '\n';
  row_open_ = false;
  require(static_cast<bool>(out_), ErrorKind::Io, "CsvWriter: write failed");
}

int CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (first) {
      table.header = std::move(cells);
      first = false;
    } else {
      table.rows.push_back(std::move(cells));
    }
  }
  return table;
}

}  // namespace hetnet
