#include "jumpkit/trace.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace jumpkit {

CsvWriter::CsvWriter(const std::string& path,
                     const std::vector<std::string>& columns)
    : out_(path), columns_(columns) {
  if (!out_) throw std::runtime_error("cannot write " + path);
  for (size_t i = 0; i < columns_.size(); ++i)
    out_ << (i ? "," : "") << columns_[i];
  out_ << "\n";
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != columns_.size())
    throw std::invalid_argument("csv row size mismatch");
  char buf[32];
  for (size_t i = 0; i < values.size(); ++i) {
    snprintf(buf, sizeof(buf), "%.17g", values[i]);
    out_ << (i ? "," : "") << buf;
  }
  out_ << "\n";
}

int CsvTable::col(const std::string& name) const {
  for (size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  return -1;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error(path + ": empty csv");
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) t.columns.push_back(cell);
  std::vector<std::vector<double>> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<double> r;
    while (std::getline(ss, cell, ',')) r.push_back(std::stod(cell));
    if (r.size() != t.columns.size())
      throw std::runtime_error(path + ": ragged csv row");
    rows.push_back(std::move(r));
  }
  t.data.resize(rows.size(), t.columns.size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < t.columns.size(); ++j) t.data(i, j) = rows[i][j];
  return t;
}

}  // namespace jumpkit
