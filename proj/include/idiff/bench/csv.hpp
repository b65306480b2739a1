#pragma once

/// \file csv.hpp
/// \brief Rectangular numeric tables written as ASCII CSV with shortest
/// round-trip number formatting.

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <utility>
#include <vector>

#include "idiff/errors.hpp"
#include "idiff/linalg/dense.hpp"

namespace idiff::bench {

/// Shortest decimal representation of v that parses back to the same double.
inline std::string format_number(double v) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw Error("format_number: conversion failed");
  return std::string(buf, end);
}

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {
    if (header_.empty()) throw DimensionError("CsvTable: header must not be empty");
  }

  /// Appends a row; throws DimensionError on a length mismatch and
  /// NumericalError on a non-finite value.
  void add_row(std::vector<double> row) {
    detail::require_dims(row.size() == header_.size(), "CsvTable: row length does not match the header");
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (!std::isfinite(row[j])) {
        throw NumericalError("CsvTable: non-finite value in column '" + header_[j] + "' of row " +
                             std::to_string(rows_.size()));
      }
    }
    rows_.push_back(std::move(row));
  }

  [[nodiscard]] const std::vector<std::string>& header() const { return header_; }
  [[nodiscard]] const std::vector<std::vector<double>>& rows() const { return rows_; }
  [[nodiscard]] std::size_t size() const { return rows_.size(); }

  [[nodiscard]] std::size_t column_index(const std::string& name) const {
    for (std::size_t j = 0; j < header_.size(); ++j)
      if (header_[j] == name) return j;
    throw DimensionError("CsvTable: no column named '" + name + "'");
  }

  [[nodiscard]] std::vector<double> column(const std::string& name) const {
    const std::size_t j = column_index(name);
    std::vector<double> out;
    out.reserve(rows_.size());
    for (const auto& r : rows_) out.push_back(r[j]);
    return out;
  }

  void write(std::ostream& os) const {
    for (std::size_t j = 0; j < header_.size(); ++j) os << (j ? "," : "") << header_[j];
    os << '\n';
    for (const auto& r : rows_) {
      for (std::size_t j = 0; j < r.size(); ++j) os << (j ? "," : "") << format_number(r[j]);
      os << '\n';
    }
  }

  [[nodiscard]] std::string str() const {
    std::ostringstream os;
    write(os);
    return os.str();
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("CsvTable: cannot open '" + path + "' for writing");
    write(out);
    if (!out) throw Error("CsvTable: write to '" + path + "' failed");
  }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<double>> rows_;
};

/// A matrix as a table with columns c0..c{cols−1}, one row per matrix row.
inline CsvTable matrix_table(const DenseMatrix& a) {
  std::vector<std::string> header;
  for (std::size_t j = 0; j < a.cols(); ++j) header.push_back("c" + std::to_string(j));
  CsvTable t(std::move(header));
  for (std::size_t i = 0; i < a.rows(); ++i) {
    std::vector<double> row(a.cols());
    for (std::size_t j = 0; j < a.cols(); ++j) row[j] = a(i, j);
    t.add_row(std::move(row));
  }
  return t;
}

}  // namespace idiff::bench
