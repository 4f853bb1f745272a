#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hetnet {

// Minimal CSV emitter. Floating-point fields use 17 significant digits so
// values round-trip exactly.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  void header(std::span<const std::string> names);
  void field(double value);
  void field(long value);
  void field(int value) { field(static_cast<long>(value)); }
  void field(std::string_view value);
  void end_row();

 private:
  void separator();

  std::ostream& out_;
  bool row_open_ = false;
};

std::string format_double(double value);

// Parses a CSV produced by CsvWriter (no quoting) into header + rows.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(std::string_view name) const;  // -1 when absent
};

CsvTable read_csv(std::istream& in);

}  // namespace hetnet
