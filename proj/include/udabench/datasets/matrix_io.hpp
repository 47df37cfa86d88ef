#pragma once

#include <cstdio>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "udabench/core/binary_io.hpp"
#include "udabench/core/error.hpp"
#include "udabench/diffcore/tensor.hpp"

namespace udabench::data {

// Matrix file: "UDAM", u32 version 1, u64 rows, u64 cols, row-major f64.
// Label file:  "UDAL", u32 version 1, u64 length, i64 payload. All little-endian.
// Paths ending in ".csv" are read as comma-separated decimals with an optional header row.

inline std::vector<char> encode_matrix(const Tensor& t) {
  std::vector<char> out;
  binary::put_bytes(out, "UDAM", 4);
  binary::put<std::uint32_t>(out, 1);
  binary::put<std::uint64_t>(out, t.rows());
  binary::put<std::uint64_t>(out, t.cols());
  for (double v : t.data()) binary::put<double>(out, v);
  return out;
}

inline Tensor decode_matrix(std::vector<char> bytes, const std::string& source) {
  binary::Reader r(std::move(bytes), source);
  r.expect_magic("UDAM");
  r.expect_version(1);
  const auto rows = r.get<std::uint64_t>("rows");
  const auto cols = r.get<std::uint64_t>("cols");
  if (cols != 0 && rows > r.remaining() / 8 / cols) r.fail("payload shorter than rows*cols");
  Tensor t(rows, cols);
  for (auto& v : t.data()) v = r.get<double>("payload");
  if (!r.at_end()) r.fail("trailing bytes after payload");
  return t;
}

inline std::vector<char> encode_labels(const std::vector<int>& labels) {
  std::vector<char> out;
  binary::put_bytes(out, "UDAL", 4);
  binary::put<std::uint32_t>(out, 1);
  binary::put<std::uint64_t>(out, labels.size());
  for (int v : labels) binary::put<std::int64_t>(out, v);
  return out;
}

inline std::vector<int> decode_labels(std::vector<char> bytes, const std::string& source) {
  binary::Reader r(std::move(bytes), source);
  r.expect_magic("UDAL");
  r.expect_version(1);
  const auto n = r.get<std::uint64_t>("length");
  if (n > r.remaining() / 8) r.fail("payload shorter than length");
  std::vector<int> out(n);
  for (auto& v : out) v = static_cast<int>(r.get<std::int64_t>("payload"));
  if (!r.at_end()) r.fail("trailing bytes after payload");
  return out;
}

namespace detail {

inline bool ends_with_csv(const std::string& path) {
  return path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
}

inline bool parse_double(std::string_view s, double& out) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

inline std::vector<std::vector<double>> read_csv_numbers(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0, offset = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t line_offset = offset;
    offset += line.size() + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    bool ok = true;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      double v;
      if (!parse_double(cell, v)) {
        ok = false;
        break;
      }
      row.push_back(v);
    }
    if (!ok) {
      if (rows.empty() && line_no == 1) continue;  // header row
      throw FormatError(path + ": non-numeric cell on line " + std::to_string(line_no), line_offset);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FormatError(path + ": line " + std::to_string(line_no) + " has " +
                            std::to_string(row.size()) + " columns, expected " +
                            std::to_string(rows.front().size()),
                        line_offset);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace detail

namespace detail {
inline void write_csv_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open " + path + " for writing");
  out << text;
  if (!out.flush()) throw InputError("write to " + path + " failed");
}
}  // namespace detail

/// Binary unless the path ends in .csv; CSV cells use 17 significant digits
/// so values survive the round trip exactly.
inline void save_matrix(const std::string& path, const Tensor& t) {
  if (!detail::ends_with_csv(path)) return binary::write_file(path, encode_matrix(t));
  std::string text;
  char buf[32];
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t j = 0; j < t.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", t(i, j));
      text += (j ? "," : "") + std::string(buf);
    }
    text += '\n';
  }
  detail::write_csv_text(path, text);
}

inline Tensor load_matrix(const std::string& path) {
  if (detail::ends_with_csv(path)) {
    auto rows = detail::read_csv_numbers(path);
    const std::size_t c = rows.empty() ? 0 : rows.front().size();
    Tensor t(rows.size(), c);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < c; ++j) t(i, j) = rows[i][j];
    return t;
  }
  return decode_matrix(binary::read_file(path), path);
}

inline void save_labels(const std::string& path, const std::vector<int>& labels) {
  if (!detail::ends_with_csv(path)) return binary::write_file(path, encode_labels(labels));
  std::string text;
  for (int l : labels) text += std::to_string(l) + '\n';
  detail::write_csv_text(path, text);
}

inline std::vector<int> load_labels(const std::string& path) {
  if (detail::ends_with_csv(path)) {
    auto rows = detail::read_csv_numbers(path);
    std::vector<int> out;
    for (const auto& r : rows) {
      if (r.size() != 1) throw FormatError(path + ": label CSV must have one column", 0);
      if (r[0] != std::floor(r[0])) throw FormatError(path + ": non-integer label", 0);
      out.push_back(static_cast<int>(r[0]));
    }
    return out;
  }
  return decode_labels(binary::read_file(path), path);
}

}  // namespace udabench::data
