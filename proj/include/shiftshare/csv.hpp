#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "shiftshare/error.hpp"

namespace shiftshare {

// A delimited text table with a mandatory header row. Cells are kept as raw
// strings; typed access happens in the loaders.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::optional<int> column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return std::nullopt;
  }

  int require_column(const std::string& name) const {
    auto c = column(name);
    if (!c) detail::fail(ErrorKind::missing_column, "column '", name, "' not found in header");
    return *c;
  }
};

namespace detail {

inline std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == delim) {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline std::string trim(std::string s) {
  auto issp = [](char c) { return c == ' ' || c == '\r' || c == '\n' || c == '\t'; };
  while (!s.empty() && issp(s.back())) s.pop_back();
  std::size_t b = 0;
  while (b < s.size() && issp(s[b])) ++b;
  return s.substr(b);
}

}  // namespace detail

inline Table read_table(std::istream& in, char delim = ',') {
  Table t;
  std::string line;
  bool have_header = false;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header) {
      // UTF-8 byte-order mark
      if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
      if (detail::trim(line).empty()) continue;
      for (auto& h : detail::split_line(line, delim)) t.header.push_back(detail::trim(h));
      have_header = true;
      continue;
    }
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_line(line, delim);
    if (cells.size() != t.header.size())
      detail::fail(ErrorKind::io, "line ", lineno, ": expected ", t.header.size(), " fields, got ",
                   cells.size());
    for (auto& c : cells) c = detail::trim(c);
    t.rows.push_back(std::move(cells));
  }
  if (!have_header) detail::fail(ErrorKind::io, "input has no header row");
  return t;
}

inline Table read_table_file(const std::string& path, char delim = ',') {
  std::ifstream f(path);
  if (!f) detail::fail(ErrorKind::io, "cannot open '", path, "'");
  return read_table(f, delim);
}

// Parses a finite double; returns nullopt for empty, NA, inf or nan cells.
inline std::optional<double> parse_finite(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  if (*b == '+') ++b;
  auto [p, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || p != e || !std::isfinite(v)) return std::nullopt;
  return v;
}

// Shortest round-tripping decimal representation.
inline std::string format_double(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

}  // namespace shiftshare
