#pragma once

// Synthetic benchmark: instance generation, sparsity-targeted penalty search
// and timed convergence races between the three solvers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "sista/error.hpp"
#include "sista/matrix_io.hpp"
#include "sista/ot_core.hpp"
#include "sista/problem.hpp"
#include "sista/solvers.hpp"

namespace sista {

struct BenchSpec {
  Index K = 100;
  Index N = 100;
  double sparsity = 0.05;
  std::uint64_t seed = 0;
  std::vector<SolverKind> solvers = {SolverKind::sista, SolverKind::ista, SolverKind::cd};

  void validate() const {
    if (K < 1 || N < 1) throw InvalidProblem("K and N must be at least 1");
    if (!(sparsity > 0.0 && sparsity <= 1.0)) throw InvalidProblem("sparsity must lie in (0,1]");
  }
};

// K standard normal basis matrices (centered on construction) and a plan
// with i.i.d. standard log-normal entries, normalized to unit mass. The
// basis is drawn first, matrix by matrix in column-major order, then the
// plan.
template <class Engine = std::mt19937_64>
Problem gen_synthetic(Index K, Index N, std::uint64_t seed, double gamma = 0.0) {
  if (K < 1 || N < 1) throw InvalidProblem("K and N must be at least 1");
  Engine rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Matrix> basis;
  basis.reserve(K);
  for (Index k = 0; k < K; ++k) {
    Matrix d(N, N);
    for (Index e = 0; e < d.size(); ++e) d.data()[e] = normal(rng);
    basis.push_back(std::move(d));
  }
  Matrix plan(N, N);
  for (Index e = 0; e < plan.size(); ++e) plan.data()[e] = std::exp(normal(rng));
  return Problem(make_observed_plan(plan, SupportMode::full), std::move(basis), gamma);
}

inline Problem gen_synthetic(const BenchSpec& spec, double gamma = 0.0) {
  spec.validate();
  return gen_synthetic(spec.K, spec.N, spec.seed, gamma);
}

// Smallest γ for which β = 0 is optimal: max_k |∂F/∂β_k| at the Sinkhorn
// solution for the zero cost.
inline double gamma_max(const Problem& problem) {
  const CostParams zero = CostParams::Zero(problem.num_params());
  const auto sk = sinkhorn_solve(zero, problem, 1e-15, 100000);
  return grad_beta(sk.potentials.u, sk.potentials.v, zero, problem).cwiseAbs().maxCoeff();
}

struct GammaSearchConfig {
  SolverConfig solver;
  int max_fits = 80;
  double min_ratio = 1e-12;  // smallest γ tried, relative to γ_max (before γ = 0)
};

struct GammaSearchResult {
  double gamma = 0.0;
  Solution solution;
  Index nnz = 0;
  Index target = 0;
  bool exact = false;
  int fits = 0;
  std::string warning;
};

// Bisection (geometric) on γ until the fitted β has exactly `count`
// nonzeros. Fits are warm-started from the closest previous solution.
inline GammaSearchResult find_gamma_for_count(const Problem& problem, Index count,
                                              const GammaSearchConfig& config = {}) {
  const Index K = problem.num_params();
  if (count < 0 || count > K) throw InvalidProblem("nonzero count must lie in [0, K]");
  GammaSearchResult best;
  best.target = count;
  const double gmax = gamma_max(problem);

  std::optional<InitialPoint> warm;
  auto fit = [&](double gamma) {
    auto sol = sista_solve(problem.with_gamma(gamma), config.solver, warm);
    warm = InitialPoint{sol.potentials, sol.beta};
    ++best.fits;
    const Index nnz = sol.nnz();
    const bool closer = best.fits == 1 || std::abs(nnz - count) < std::abs(best.nnz - count);
    if (closer) {
      best.gamma = gamma;
      best.nnz = nnz;
      best.solution = std::move(sol);
    }
    return nnz;
  };

  if (count == 0) {
    fit(gmax);
    best.exact = best.nnz == 0;
    return best;
  }

  double hi = gmax;  // nnz(hi) == 0 < count
  double lo = gmax;
  Index nnz_lo = 0;
  // Walk down until the count is reached or exceeded.
  while (nnz_lo < count && best.fits < config.max_fits) {
    hi = lo;
    lo *= 0.5;
    if (lo < gmax * config.min_ratio) {
      lo = 0.0;
      nnz_lo = fit(0.0);
      break;
    }
    nnz_lo = fit(lo);
  }
  if (nnz_lo == count) {
    best.exact = true;
    return best;
  }
  if (nnz_lo > count) {
    while (best.fits < config.max_fits) {
      const double mid = lo > 0.0 ? std::sqrt(lo * hi) : 0.5 * hi;
      const Index nnz = fit(mid);
      if (nnz == count) {
        best.exact = true;
        return best;
      }
      if (nnz < count) {
        hi = mid;
      } else {
        lo = mid;
      }
      if (hi - lo <= 1e-15 * hi) break;
    }
  }
  best.exact = best.nnz == count;
  if (!best.exact) {
    best.warning = "could not reach exactly " + std::to_string(count) + " nonzeros; nearest is " +
                   std::to_string(best.nnz) + " at gamma " + std::to_string(best.gamma);
  }
  return best;
}

// Target expressed as a fraction of K (count = round(target·K)).
inline GammaSearchResult find_gamma_for_sparsity(const Problem& problem, double target,
                                                 const GammaSearchConfig& config = {}) {
  const double scaled = target * static_cast<double>(problem.num_params());
  if (!(target > 0.0 && target <= 1.0) || scaled < 1.0 - 1e-12)
    throw InvalidProblem("sparsity target must satisfy target*K >= 1 and target <= 1");
  return find_gamma_for_count(problem, static_cast<Index>(std::llround(scaled)), config);
}

struct RaceConfig {
  std::vector<SolverKind> solvers = {SolverKind::sista, SolverKind::ista, SolverKind::cd};
  SolverConfig solver;            // shared settings for the racing solvers
  double reference_tol_kkt = 1e-12;
  int reference_iter_factor = 10;  // reference max_iter = factor * solver.max_iter
  double gap_floor = 1e-8;        // a racing solver stops once its gap is below this
  double time_budget = 120.0;     // seconds per solver
  bool parallel = false;
};

struct RaceResult {
  double phi_star = 0.0;
  Solution reference;
  std::map<std::string, Solution> runs;  // keyed by solver name
  std::uint64_t checksum = 0;
  bool parallel = false;
};

// First elapsed time at which the trace's gap is at most `level`.
inline std::optional<double> time_to_gap(const SolverTrace& trace, double level) {
  for (const auto& r : trace.records) {
    if (r.gap <= level) return r.elapsed_seconds;
  }
  return std::nullopt;
}

// Runs a tight SISTA reference, then every requested solver from the zero
// point against that single reference value.
inline RaceResult run_race(const Problem& base, double gamma, const RaceConfig& config = {}) {
  const Problem problem = base.with_gamma(gamma);
  RaceResult result;
  result.checksum = problem_checksum(problem);
  result.parallel = config.parallel;

  SolverConfig ref_config = config.solver;
  ref_config.tol_kkt = config.reference_tol_kkt;
  ref_config.max_iter = config.solver.max_iter * config.reference_iter_factor;
  ref_config.reference_phi.reset();
  ref_config.gap_tol = 0.0;
  ref_config.time_budget = std::numeric_limits<double>::infinity();
  result.reference = sista_solve(problem, ref_config);
  result.phi_star = result.reference.phi;
  for (auto& r : result.reference.trace.records) r.gap = std::abs(r.phi - result.phi_star);

  SolverConfig race_config = config.solver;
  race_config.reference_phi = result.phi_star;
  race_config.gap_tol = config.gap_floor;
  race_config.time_budget = config.time_budget;

  std::vector<Solution> runs(config.solvers.size());
  auto run_one = [&](std::size_t i) {
    runs[i] = solve(config.solvers[i], problem, race_config, InitialPoint::zeros(problem));
  };
  if (config.parallel) {
    std::vector<std::thread> threads;
    for (std::size_t i = 0; i < config.solvers.size(); ++i) threads.emplace_back(run_one, i);
    for (auto& t : threads) t.join();
  } else {
    for (std::size_t i = 0; i < config.solvers.size(); ++i) run_one(i);
  }
  for (std::size_t i = 0; i < config.solvers.size(); ++i)
    result.runs[to_string(config.solvers[i])] = std::move(runs[i]);
  return result;
}

struct PlotEmission {
  std::vector<std::filesystem::path> files;
  std::map<std::string, std::size_t> rows;
  std::map<std::string, std::size_t> dropped;  // rows with zero time or zero gap
  std::filesystem::path manifest;
};

// Writes <dir>/<solver>.dat with columns log10_time,log10_gap plus a
// manifest listing every file. Rows whose time or gap is not positive have
// no logarithm and are dropped (and counted).
inline PlotEmission emit_plot_data(const std::map<std::string, SolverTrace>& traces,
                                   const std::filesystem::path& dir) {
  if (traces.empty()) throw InvalidProblem("no traces to emit");
  std::filesystem::create_directories(dir);
  PlotEmission out;
  for (const auto& [name, trace] : traces) {
    const auto path = dir / (name + ".dat");
    auto file = detail::open_out(path);
    file << "log10_time,log10_gap\n";
    std::size_t rows = 0, dropped = 0;
    for (const auto& r : trace.records) {
      if (!(r.elapsed_seconds > 0.0) || !(r.gap > 0.0)) {
        ++dropped;
        continue;
      }
      file << detail::format_double(std::log10(r.elapsed_seconds)) << ','
           << detail::format_double(std::log10(r.gap)) << '\n';
      ++rows;
    }
    if (!file) throw IoError("write failed: " + path.string());
    out.files.push_back(path);
    out.rows[name] = rows;
    out.dropped[name] = dropped;
  }
  out.manifest = dir / "manifest.txt";
  auto m = detail::open_out(out.manifest);
  m << "# solver,file,rows,dropped\n";
  for (const auto& [name, trace] : traces) {
    m << name << ',' << name << ".dat," << out.rows[name] << ',' << out.dropped[name] << '\n';
  }
  if (!m) throw IoError("write failed: " + out.manifest.string());
  return out;
}

inline std::vector<std::pair<double, double>> read_plot_data(const std::filesystem::path& path) {
  auto in = detail::open_in(path);
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::pair<double, double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::blank(line)) continue;
    auto tok = detail::split_commas(line);
    if (tok.size() != 2) throw ParseError(path.string() + ": expected two columns");
    rows.emplace_back(detail::parse_double(tok[0], line_no), detail::parse_double(tok[1], line_no));
  }
  return rows;
}

}  // namespace sista
