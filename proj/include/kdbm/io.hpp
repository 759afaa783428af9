#pragma once

// CSV emission. Numbers are printed with 17 significant digits so a file
// round-trips every double and identical runs give identical bytes.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "kdbm/hermitian.hpp"

namespace kdbm {

inline constexpr std::string_view kPathsSchema = "kdbm paths v1";
inline constexpr std::string_view kSummarySchema = "kdbm summary v1";

inline std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

class CsvWriter {
 public:
  CsvWriter() = default;
  /// A writer for body rows only, to be appended after a header elsewhere.
  explicit CsvWriter(std::size_t columns) : columns_(columns) {}

  void comment(std::string_view text) {
    out_ += "# ";
    out_ += text;
    out_ += '\n';
  }

  void header(std::span<const std::string> columns) {
    columns_ = columns.size();
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i) out_ += ',';
      out_ += columns[i];
    }
    out_ += '\n';
  }

  CsvWriter& field(std::string_view s) {
    if (!line_.empty()) line_ += ',';
    line_ += s;
    ++fields_;
    return *this;
  }
  CsvWriter& field(double x) { return field(format_number(x)); }
  CsvWriter& field(std::uint64_t x) { return field(std::to_string(x)); }

  /// Upper triangle, row major, as (re, im) pairs.
  template <int D>
  CsvWriter& fields(const Hermitian<D>& h) {
    for (int i = 0; i < D; ++i)
      for (int j = i; j < D; ++j) field(h(i, j).real()).field(h(i, j).imag());
    return *this;
  }

  void end_row() {
    if (fields_ != columns_)
      throw std::logic_error("csv row has " + std::to_string(fields_) + " fields, header has " +
                             std::to_string(columns_));
    out_ += line_;
    out_ += '\n';
    line_.clear();
    fields_ = 0;
  }

  const std::string& str() const { return out_; }

 private:
  std::string out_;
  std::string line_;
  std::size_t columns_ = 0;
  std::size_t fields_ = 0;
};

/// Column names for the upper triangle of a Hermitian matrix, 1-based.
inline void append_matrix_columns(std::vector<std::string>& cols, std::string_view name, int d) {
  for (int i = 1; i <= d; ++i)
    for (int j = i; j <= d; ++j) {
      const std::string base = std::string(name) + "_" + std::to_string(i) + std::to_string(j);
      cols.push_back(base + "_re");
      cols.push_back(base + "_im");
    }
}

inline void append_indexed_columns(std::vector<std::string>& cols, std::string_view name, int count) {
  for (int i = 1; i <= count; ++i) cols.push_back(std::string(name) + "_" + std::to_string(i));
}

inline void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << contents;
  f.close();
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace kdbm
