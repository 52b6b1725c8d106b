#include "gsae/csv.hpp"

#include <cstdio>

#include "gsae/errors.hpp"

namespace gsae {

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path,
                     const std::vector<std::string>& columns)
    : out_(path, std::ios::trunc), path_(path), columns_(columns.size()) {
  if (!out_) throw IoError(path + ": cannot open for writing");
  if (columns.empty()) throw ConfigError("CSV needs at least one column");
  write_row(columns);
}

CsvWriter::~CsvWriter() { out_.flush(); }

void CsvWriter::write_row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) {
    throw DimensionError(path_ + ": row width does not match the header");
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
  if (!out_) throw IoError(path_ + ": write failed");
}

void CsvWriter::write_row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (const double v : values) cells.push_back(format_double(v));
  write_row(cells);
}

}  // namespace gsae
