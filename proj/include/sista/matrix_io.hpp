#pragma once

// Plain-text matrix and characteristics files.
//
// Matrix format: one row per line, entries separated by single commas,
// decimal floating literals. Blank trailing lines are ignored.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "sista/error.hpp"

namespace sista {

namespace detail {

inline double parse_double(std::string_view token, std::size_t line_no) {
  while (!token.empty() && (token.front() == ' ' || token.front() == '\t')) token.remove_prefix(1);
  while (!token.empty() && (token.back() == ' ' || token.back() == '\t' || token.back() == '\r'))
    token.remove_suffix(1);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (token.empty() || ec != std::errc() || ptr != token.data() + token.size()) {
    throw ParseError("line " + std::to_string(line_no) + ": not a number: '" + std::string(token) +
                     "'");
  }
  return value;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

inline bool blank(std::string_view line) {
  return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

// Shortest representation that round-trips exactly.
inline std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

}  // namespace detail

inline Eigen::MatrixXd parse_matrix(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::blank(line)) continue;
    std::vector<double> row;
    for (auto tok : detail::split_commas(line)) row.push_back(detail::parse_double(tok, line_no));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError("line " + std::to_string(line_no) + ": expected " +
                       std::to_string(rows.front().size()) + " columns, got " +
                       std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("empty matrix");
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

inline Eigen::MatrixXd read_matrix(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  try {
    return parse_matrix(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

inline void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << detail::format_double(m(i, j));
    }
    out << '\n';
  }
}

inline void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  auto out = detail::open_out(path);
  write_matrix(out, m);
  if (!out) throw IoError("write failed: " + path.string());
}

// Entity characteristics: one line per entity, first token an identifier,
// followed by P numeric components.
struct CharacteristicsTable {
  std::vector<std::string> ids;
  Eigen::MatrixXd values;  // one row per entity, P columns
};

inline CharacteristicsTable read_characteristics(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  CharacteristicsTable table;
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::blank(line)) continue;
    auto tokens = detail::split_commas(line);
    if (tokens.size() < 2) {
      throw ParseError(path.string() + ": line " + std::to_string(line_no) +
                       ": need an identifier and at least one component");
    }
    table.ids.emplace_back(tokens.front());
    std::vector<double> row;
    for (std::size_t t = 1; t < tokens.size(); ++t)
      row.push_back(detail::parse_double(tokens[t], line_no));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError(path.string() + ": line " + std::to_string(line_no) +
                       ": inconsistent number of components");
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError(path.string() + ": empty characteristics file");
  table.values.resize(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) table.values(i, j) = rows[i][j];
  return table;
}

}  // namespace sista
