#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "xindep/core_data.hpp"
#include "xindep/errors.hpp"

namespace xindep {

namespace csv_detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return fields;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::string expected_header(std::size_t d1, std::size_t d2) {
  std::string header;
  for (std::size_t j = 0; j < d1; ++j) header += (j ? ",x" : "x") + std::to_string(j);
  for (std::size_t j = 0; j < d2; ++j) header += ",y" + std::to_string(j);
  return header;
}

}  // namespace csv_detail

/// Shortest round-trippable rendering (at most 17 significant digits).
inline std::string format_double(double value) {
  char buffer[32];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), value);
  return std::string(buffer, result.ptr);
}

inline double parse_double(std::string_view text, bool* ok) {
  text = csv_detail::trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  const auto result = std::from_chars(text.data(), text.data() + text.size(), value);
  *ok = !text.empty() && result.ec == std::errc() && result.ptr == text.data() + text.size() &&
        std::isfinite(value);
  return value;
}

/// Reads a sample with header x0..x{d1-1},y0..y{d2-1}. Row and column numbers
/// in error messages are 1-based and count the header as row 1.
inline PairedSample load_csv(const std::string& path, std::size_t d1, std::size_t d2) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open input file: " + path);
  if (d1 == 0 || d2 == 0) throw InputError("dimensions d1 and d2 must be positive");

  std::string line;
  if (!std::getline(in, line)) throw InputError(path + ": file is empty (missing header row)");
  const auto header = csv_detail::split_fields(line);
  const std::size_t width = d1 + d2;
  if (header.size() != width) {
    throw InputError(path + ": header has " + std::to_string(header.size()) +
                     " columns, expected " + std::to_string(width) + " (" +
                     csv_detail::expected_header(d1, d2) + ")");
  }
  for (std::size_t j = 0; j < width; ++j) {
    const std::string want = j < d1 ? "x" + std::to_string(j) : "y" + std::to_string(j - d1);
    if (csv_detail::trim(header[j]) != want) {
      throw InputError(path + ": header column " + std::to_string(j + 1) + " is '" +
                       std::string(csv_detail::trim(header[j])) + "', expected '" + want + "'");
    }
  }

  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (csv_detail::trim(line).empty()) continue;
    const auto fields = csv_detail::split_fields(line);
    if (fields.size() != width) {
      throw InputError(path + ": row " + std::to_string(line_number) + " has " +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(width));
    }
    for (std::size_t j = 0; j < width; ++j) {
      bool ok = false;
      const double value = parse_double(fields[j], &ok);
      if (!ok) {
        throw InputError(path + ": row " + std::to_string(line_number) + ", column " +
                         std::to_string(j + 1) + ": not a finite number: '" +
                         std::string(fields[j]) + "'");
      }
      values.push_back(value);
    }
    ++rows;
  }
  if (rows == 0) throw InputError(path + ": no data rows");

  RowMatrix x(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d1));
  RowMatrix y(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d2));
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < d1; ++j) x(i, j) = values[i * width + j];
    for (std::size_t j = 0; j < d2; ++j) y(i, j) = values[i * width + d1 + j];
  }
  return PairedSample(std::move(x), std::move(y));
}

inline void save_csv(const PairedSample& sample, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write output file: " + path);
  out << csv_detail::expected_header(sample.dim_x(), sample.dim_y()) << '\n';
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const auto xr = sample.x(i);
    const auto yr = sample.y(i);
    for (std::size_t j = 0; j < xr.size(); ++j) out << (j ? "," : "") << format_double(xr[j]);
    for (double v : yr) out << ',' << format_double(v);
    out << '\n';
  }
  if (!out) throw InputError("failed while writing: " + path);
}

}  // namespace xindep
