#pragma once

// On-disk formats.
//
// Problem bundle: a directory holding
//   manifest.txt   `key = value` lines: K, N, gamma, temperature, support,
//                  plan, and one `basis = <file> [name]` line per matrix
//   plan file      matrix text format
//   basis files    matrix text format, one per k
//
// Solution file: `key = value` lines; vectors are comma-separated.
// Trace file: CSV with header t,elapsed_seconds,phi,gap,kkt,nnz,rho.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "sista/error.hpp"
#include "sista/matrix_io.hpp"
#include "sista/preprocess.hpp"
#include "sista/problem.hpp"
#include "sista/solvers.hpp"

namespace sista {

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Ordered `key = value` pairs; '#' starts a comment line.
inline std::vector<std::pair<std::string, std::string>> read_key_values(
    const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ParseError(path.string() + ": line " + std::to_string(line_no) + ": expected key = value");
    out.emplace_back(trim(std::string_view(t).substr(0, eq)),
                     trim(std::string_view(t).substr(eq + 1)));
  }
  return out;
}

inline std::string join(const Vector& v) {
  std::string out;
  for (Index i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_double(v(i));
  }
  return out;
}

inline Vector parse_vector(const std::string& text) {
  if (trim(text).empty()) return Vector();
  auto tokens = split_commas(text);
  Vector v(static_cast<Index>(tokens.size()));
  for (std::size_t i = 0; i < tokens.size(); ++i) v(i) = parse_double(tokens[i], 0);
  return v;
}

inline double parse_number(const std::string& key, const std::string& value) {
  try {
    return parse_double(value, 0);
  } catch (const ParseError&) {
    throw ParseError("manifest key '" + key + "' is not a number: '" + value + "'");
  }
}

}  // namespace detail

struct BundleManifest {
  Index K = 0;
  Index N = 0;
  double gamma = 0.0;
  double temperature = 1.0;
  SupportMode support = SupportMode::structural;
  std::string plan_file = "plan.csv";
  std::vector<std::string> basis_files;
  std::vector<std::string> names;
};

inline BundleManifest read_manifest(const std::filesystem::path& path) {
  BundleManifest m;
  bool have_k = false, have_n = false;
  for (const auto& [key, value] : detail::read_key_values(path)) {
    if (key == "K") {
      m.K = static_cast<Index>(detail::parse_number(key, value));
      have_k = true;
    } else if (key == "N") {
      m.N = static_cast<Index>(detail::parse_number(key, value));
      have_n = true;
    } else if (key == "gamma") {
      m.gamma = detail::parse_number(key, value);
    } else if (key == "temperature") {
      m.temperature = detail::parse_number(key, value);
    } else if (key == "support") {
      if (value == "structural") {
        m.support = SupportMode::structural;
      } else if (value == "full") {
        m.support = SupportMode::full;
      } else {
        throw ParseError("unknown support mode '" + value + "'");
      }
    } else if (key == "plan") {
      m.plan_file = value;
    } else if (key == "basis") {
      std::istringstream ss(value);
      std::string file, name;
      ss >> file;
      std::getline(ss, name);
      name = detail::trim(name);
      if (file.empty()) throw ParseError("empty basis entry in manifest");
      m.names.push_back(name.empty() ? "d" + std::to_string(m.basis_files.size() + 1) : name);
      m.basis_files.push_back(file);
    } else {
      throw ParseError("unknown manifest key '" + key + "'");
    }
  }
  if (!have_k || !have_n) throw ParseError("manifest must declare K and N");
  if (m.K < 1 || m.N < 1) throw InvalidProblem("manifest K and N must be positive");
  if (static_cast<Index>(m.basis_files.size()) != m.K) {
    throw InvalidProblem("manifest declares K = " + std::to_string(m.K) + " but lists " +
                         std::to_string(m.basis_files.size()) + " basis files");
  }
  return m;
}

struct BundleOverrides {
  std::optional<double> gamma;
  std::optional<double> temperature;
  std::optional<SupportMode> support;
};

inline Problem read_bundle(const std::filesystem::path& dir, const BundleOverrides& overrides = {}) {
  const BundleManifest m = read_manifest(dir / "manifest.txt");
  const Matrix plan_raw = read_matrix(dir / m.plan_file);
  if (plan_raw.rows() != m.N || plan_raw.cols() != m.N) {
    throw DimensionError(m.plan_file + " is " + std::to_string(plan_raw.rows()) + "x" +
                         std::to_string(plan_raw.cols()) + ", manifest says N = " +
                         std::to_string(m.N));
  }
  std::vector<Matrix> basis;
  basis.reserve(m.K);
  for (const auto& file : m.basis_files) {
    Matrix d = read_matrix(dir / file);
    if (d.rows() != m.N || d.cols() != m.N) {
      throw DimensionError(file + " is " + std::to_string(d.rows()) + "x" +
                           std::to_string(d.cols()) + ", manifest says N = " +
                           std::to_string(m.N));
    }
    basis.push_back(std::move(d));
  }
  const SupportMode mode = overrides.support.value_or(m.support);
  return Problem(make_observed_plan(plan_raw, mode), std::move(basis),
                 overrides.gamma.value_or(m.gamma), overrides.temperature.value_or(m.temperature),
                 m.names);
}

// Writes the normalized plan and the (temperature-folded) raw basis, so the
// bundle reads back with temperature 1.
inline void write_bundle(const std::filesystem::path& dir, const Problem& problem) {
  std::filesystem::create_directories(dir);
  write_matrix(dir / "plan.csv", problem.plan().entries);
  auto manifest = detail::open_out(dir / "manifest.txt");
  manifest << "# inverse transport problem bundle\n"
           << "K = " << problem.num_params() << '\n'
           << "N = " << problem.size() << '\n'
           << "gamma = " << detail::format_double(problem.gamma()) << '\n'
           << "temperature = 1\n"
           << "support = " << to_string(problem.plan().mode) << '\n'
           << "plan = plan.csv\n";
  const auto& raw = problem.basis().raw;
  for (std::size_t k = 0; k < raw.size(); ++k) {
    char file[32];
    std::snprintf(file, sizeof(file), "basis_%04zu.csv", k);
    write_matrix(dir / file, raw[k]);
    manifest << "basis = " << file << ' ' << problem.names()[k] << '\n';
  }
  if (!manifest) throw IoError("write failed: " + (dir / "manifest.txt").string());
}

inline void write_trace(const std::filesystem::path& path, const SolverTrace& trace) {
  auto out = detail::open_out(path);
  out << "t,elapsed_seconds,phi,gap,kkt,nnz,rho\n";
  for (const auto& r : trace.records) {
    out << r.iteration << ',' << detail::format_double(r.elapsed_seconds) << ','
        << detail::format_double(r.phi) << ',' << detail::format_double(r.gap) << ','
        << detail::format_double(r.kkt) << ',' << r.nnz << ',' << detail::format_double(r.rho)
        << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

inline SolverTrace read_trace(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  SolverTrace trace;
  std::string line;
  std::getline(in, line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::blank(line)) continue;
    auto tok = detail::split_commas(line);
    if (tok.size() != 7) throw ParseError(path.string() + ": expected 7 columns");
    TraceRecord r;
    r.iteration = static_cast<int>(detail::parse_double(tok[0], line_no));
    r.elapsed_seconds = detail::parse_double(tok[1], line_no);
    r.phi = detail::parse_double(tok[2], line_no);
    r.gap = detail::parse_double(tok[3], line_no);
    r.kkt = detail::parse_double(tok[4], line_no);
    r.nnz = static_cast<Index>(detail::parse_double(tok[5], line_no));
    r.rho = detail::parse_double(tok[6], line_no);
    trace.records.push_back(r);
  }
  return trace;
}

inline void write_solution(const std::filesystem::path& path, const Solution& sol,
                           const Problem& problem, const std::string& solver) {
  auto out = detail::open_out(path);
  out << "# fitted inverse transport solution\n"
      << "solver = " << solver << '\n'
      << "converged = " << (sol.converged ? 1 : 0) << '\n'
      << "stop_reason = " << sol.stop_reason << '\n'
      << "iterations = " << sol.iterations << '\n'
      << "gamma = " << detail::format_double(problem.gamma()) << '\n'
      << "phi = " << detail::format_double(sol.phi) << '\n'
      << "kkt_residual = " << detail::format_double(sol.kkt_residual) << '\n'
      << "K = " << sol.beta.size() << '\n'
      << "N = " << sol.potentials.u.size() << '\n'
      << "nnz = " << sol.nnz() << '\n'
      << "beta = " << detail::join(sol.beta) << '\n'
      << "u = " << detail::join(sol.potentials.u) << '\n'
      << "v = " << detail::join(sol.potentials.v) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

struct SolutionRecord {
  std::map<std::string, std::string> fields;
  CostParams beta;
  Vector u;
  Vector v;
  bool converged = false;
};

inline SolutionRecord read_solution(const std::filesystem::path& path) {
  SolutionRecord rec;
  for (auto& [k, v] : detail::read_key_values(path)) rec.fields[k] = v;
  rec.beta = detail::parse_vector(rec.fields["beta"]);
  rec.u = detail::parse_vector(rec.fields["u"]);
  rec.v = detail::parse_vector(rec.fields["v"]);
  rec.converged = rec.fields["converged"] == "1";
  return rec;
}

// One row per basis matrix: index,name,beta,se.
inline void write_se_report(const std::filesystem::path& path, const std::vector<std::string>& names,
                            const CostParams& beta, const Vector& se) {
  detail::require_dims(beta.size() == se.size() && static_cast<Index>(names.size()) == beta.size(),
                       "report columns");
  auto out = detail::open_out(path);
  out << "index,name,beta,se\n";
  for (Index k = 0; k < beta.size(); ++k) {
    out << k + 1 << ',' << names[k] << ',' << detail::format_double(beta(k)) << ','
        << detail::format_double(se(k)) << '\n';
  }
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace sista
