#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "udabench/core/error.hpp"

namespace udabench::analysis {

/// A rectangular table of preformatted cells; the unit every analysis emits.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> r) {
    if (r.size() != header.size()) {
      throw InputError("row has " + std::to_string(r.size()) + " cells, table has " + std::to_string(header.size()));
    }
    rows.push_back(std::move(r));
  }
  bool operator==(const Table&) const = default;
};

/// Missing values print as a dash in markdown and as an empty field in CSV.
inline const std::string kMissing = "-";

inline std::string fmt_num(double v, int precision = 6) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  std::string s = buf;
  if (s.find_first_not_of("-0.") == std::string::npos && s[0] == '-') s.erase(0, 1);  // no "-0.000"
  return s;
}

inline std::string fmt_num(const std::optional<double>& v, int precision = 6) {
  return v ? fmt_num(*v, precision) : kMissing;
}

/// Fraction in [0,1] as a percentage with one decimal, the way accuracy tables read.
inline std::string fmt_pct(const std::optional<double>& v) {
  return v ? fmt_num(100.0 * *v, 1) : kMissing;
}

namespace detail {
inline std::string csv_field(const std::string& s) {
  if (s == kMissing) return "";
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}
}  // namespace detail

inline std::string to_csv(const Table& t) {
  std::string out;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + detail::csv_field(cells[i]);
    out += '\n';
  };
  line(t.header);
  for (const auto& r : t.rows) line(r);
  return out;
}

/// Inverse of to_csv (empty fields come back as the missing marker).
inline Table parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> lines;
  std::vector<std::string> cur;
  std::string field;
  bool quoted = false, any = false;
  std::size_t line_no = 1;
  auto end_field = [&] {
    cur.push_back(field.empty() ? kMissing : field);
    field.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    any = true;
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        if (c == '\n') ++line_no;
        field += c;
      }
    } else if (c == '"') {
      if (!field.empty()) throw FormatError("stray quote on CSV line " + std::to_string(line_no), line_no);
      quoted = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_field();
      lines.push_back(std::move(cur));
      cur.clear();
      any = false;
      ++line_no;
    } else if (c != '\r') {
      field += c;
    }
  }
  if (quoted) throw FormatError("unterminated quote on CSV line " + std::to_string(line_no), line_no);
  if (any) {
    end_field();
    lines.push_back(std::move(cur));
  }
  if (lines.empty()) throw FormatError("empty CSV", 1);
  Table t;
  t.header = std::move(lines[0]);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].size() != t.header.size()) {
      throw FormatError("CSV line " + std::to_string(i + 1) + " has " + std::to_string(lines[i].size()) +
                            " fields, expected " + std::to_string(t.header.size()),
                        i + 1);
    }
    t.rows.push_back(std::move(lines[i]));
  }
  return t;
}

inline std::string to_markdown(const Table& t) {
  auto esc = [](const std::string& s) {
    std::string o;
    for (char c : s) o += c == '|' ? std::string("\\|") : std::string(1, c);
    return o;
  };
  std::string out = "|";
  for (const auto& h : t.header) out += " " + esc(h) + " |";
  out += "\n|";
  for (std::size_t i = 0; i < t.header.size(); ++i) out += i == 0 ? " --- |" : " ---: |";
  out += "\n";
  for (const auto& r : t.rows) {
    out += "|";
    for (const auto& c : r) out += " " + esc(c) + " |";
    out += "\n";
  }
  return out;
}

enum class Format { csv, markdown, plot_data };

inline Format parse_format(const std::string& s) {
  if (s == "csv") return Format::csv;
  if (s == "markdown" || s == "md") return Format::markdown;
  if (s == "plot-data") return Format::plot_data;
  throw ConfigError("unknown output format '" + s + "' (csv, markdown, plot-data)");
}

/// Plot data is CSV whose first column is the x axis; the distinction is in
/// what gets tabulated, not in the bytes.
inline std::string render(const Table& t, Format f) { return f == Format::markdown ? to_markdown(t) : to_csv(t); }

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot open " + path + " for writing");
  out << text;
  out.flush();
  if (!out) throw InputError("write to " + path + " failed");
}

inline void emit(const Table& t, Format f, const std::string& path) { write_text(path, render(t, f)); }

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Table load_csv(const std::string& path) { return parse_csv(read_text(path)); }

}  // namespace udabench::analysis
