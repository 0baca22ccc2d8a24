#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "jumpkit/spatial.hpp"

namespace jumpkit {

/// Column-checked CSV writer with full-precision doubles.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns);
  void row(const std::vector<double>& values);
  const std::vector<std::string>& columns() const { return columns_; }

 private:
  std::ofstream out_;
  std::vector<std::string> columns_;
};

struct CsvTable {
  std::vector<std::string> columns;
  MatX data;  // rows x columns

  int col(const std::string& name) const;
  int rows() const { return static_cast<int>(data.rows()); }
};

CsvTable read_csv(const std::string& path);

}  // namespace jumpkit
