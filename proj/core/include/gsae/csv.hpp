#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace gsae {

// Full-precision text form of a double (17 significant digits), so CSV
// regression comparisons can be exact.
std::string format_double(double value);

// Minimal CSV emitter: fixed column count, comma separator, '\n' line ends.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns);
  ~CsvWriter();

  void write_row(const std::vector<std::string>& cells);
  void write_row(const std::vector<double>& values);

 private:
  std::ofstream out_;
  std::string path_;
  std::size_t columns_;
};

}  // namespace gsae
