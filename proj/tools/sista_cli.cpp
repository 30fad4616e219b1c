// Command-line front end: simulate, build, fit, race, gamma-search,
// bootstrap and validate.
//
// Exit codes: 0 success, 1 usage error, 2 data validation failure,
// 3 solver did not converge.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sista/sista.hpp"

namespace fs = std::filesystem;
using namespace sista;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitUnconverged = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string default_out_dir() {
  if (const char* env = std::getenv("SISTA_OUT_DIR"); env && *env) return env;
  return "sista_out";
}

// Solver flags shared by fit, race, gamma-search and bootstrap.
struct SolverFlags {
  double rho = 1.0;
  std::string step = "backtracking";
  int max_iter = 100000;
  double tol_kkt = 1e-8;
  double tol_obj = 1e-15;
  double uv_step_scale = 1.0;

  void add(CLI::App* app) {
    app->add_option("--rho", rho, "Initial step size for beta")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--step", step, "Step policy")->check(CLI::IsMember({"fixed", "backtracking"}))->capture_default_str();
    app->add_option("--max-iter", max_iter, "Iteration limit")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--tol-kkt", tol_kkt, "KKT residual tolerance")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--tol-obj", tol_obj, "Relative objective change for the stall test")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--uv-step-scale", uv_step_scale, "ISTA: (u,v) step relative to the beta step")->check(CLI::PositiveNumber)->capture_default_str();
  }

  SolverConfig config() const {
    SolverConfig c;
    c.rho = rho;
    c.step_policy = step == "fixed" ? StepPolicy::fixed : StepPolicy::backtracking;
    c.max_iter = max_iter;
    c.tol_kkt = tol_kkt;
    c.tol_obj = tol_obj;
    c.uv_step_scale = uv_step_scale;
    return c;
  }
};

struct BundleFlags {
  std::string dir;
  std::optional<double> gamma;
  std::optional<double> temperature;
  std::string support;

  void add(CLI::App* app, bool with_gamma = true) {
    app->add_option("--bundle", dir, "Problem bundle directory")->required();
    if (with_gamma) app->add_option("--gamma", gamma, "L1 weight (overrides the manifest)")->check(CLI::NonNegativeNumber);
    app->add_option("--temperature", temperature, "Temperature (overrides the manifest)")->check(CLI::PositiveNumber);
    app->add_option("--support", support, "Support mode (overrides the manifest)")->check(CLI::IsMember({"structural", "full"}));
  }

  Problem load() const {
    if (!fs::is_directory(dir)) throw UsageError("bundle directory not found: " + dir);
    BundleOverrides o;
    o.gamma = gamma;
    o.temperature = temperature;
    if (!support.empty()) o.support = support == "full" ? SupportMode::full : SupportMode::structural;
    return read_bundle(dir, o);
  }
};

std::vector<SolverKind> parse_solvers(const std::string& list) {
  std::vector<SolverKind> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    auto pos = list.find(',', start);
    const std::string name = list.substr(start, pos == std::string::npos ? std::string::npos : pos - start);
    auto kind = parse_solver_kind(name);
    if (!kind) throw UsageError("unknown solver '" + name + "'");
    out.push_back(*kind);
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

void report_solution(const Solution& sol, const Problem& problem, const std::string& solver) {
  std::cout << solver << ": " << (sol.converged ? "converged" : "NOT converged") << " ("
            << sol.stop_reason << ") after " << sol.iterations << " iterations, phi = " << sol.phi
            << ", kkt = " << sol.kkt_residual << ", nnz = " << sol.nnz() << "/"
            << problem.num_params() << '\n';
}

int cmd_simulate(Index k, Index n, std::uint64_t seed, double gamma, const std::string& out) {
  const Problem problem = gen_synthetic(k, n, seed, gamma);
  write_bundle(out, problem);
  std::cout << "wrote bundle with K = " << k << ", N = " << n << " to " << out << '\n';
  return kExitOk;
}

int cmd_build(const std::string& plan_path, const std::string& x_path, const std::string& y_path,
              const std::string& builder, double gamma, const std::string& support,
              const std::string& out) {
  const auto x = read_characteristics(x_path);
  const auto y = read_characteristics(y_path);
  auto basis = builder == "cross" ? build_basis_cross(x.values, y.values)
                                  : build_basis_diag(x.values, y.values);
  const SupportMode mode = support == "full" ? SupportMode::full : SupportMode::structural;
  const Index p = x.values.cols();
  std::vector<std::string> names;
  for (Index r = 0; r < p; ++r) {
    if (builder == "cross") {
      for (Index s = 0; s < p; ++s) names.push_back("x" + std::to_string(r + 1) + "_y" + std::to_string(s + 1));
    } else {
      names.push_back("c" + std::to_string(r + 1));
    }
  }
  Problem problem(load_plan(plan_path, mode), std::move(basis), gamma, 1.0, names);
  write_bundle(out, problem);
  std::cout << "wrote bundle with K = " << problem.num_params() << ", N = " << problem.size()
            << " to " << out << '\n';
  return kExitOk;
}

int cmd_fit(const BundleFlags& bf, const SolverFlags& sf, const std::string& solver_name,
            const std::string& out) {
  const Problem problem = bf.load();
  const auto kind = parse_solver_kind(solver_name);
  if (!kind) throw UsageError("unknown solver '" + solver_name + "'");
  const auto report = check_assumptions(problem);
  if (!report.independent) std::cerr << "warning: " << report.violations.front() << '\n';
  const Solution sol = solve(*kind, problem, sf.config());
  fs::create_directories(out);
  write_solution(fs::path(out) / "solution.txt", sol, problem, solver_name);
  write_trace(fs::path(out) / "trace.csv", sol.trace);
  report_solution(sol, problem, solver_name);
  return sol.converged ? kExitOk : kExitUnconverged;
}

struct RaceFlags {
  Index k = 100;
  Index n = 100;
  double sparsity = 0.05;
  std::uint64_t seed = 0;
  std::string solvers = "sista,ista,cd";
  std::string bundle;
  double time_budget = 120.0;
  double gap_floor = 1e-8;
  double gap_level = 1e-6;
  bool parallel = false;
};

int cmd_race(const RaceFlags& rf, const SolverFlags& sf, const std::string& out) {
  const auto kinds = parse_solvers(rf.solvers);
  const Problem problem = rf.bundle.empty() ? gen_synthetic(rf.k, rf.n, rf.seed) : read_bundle(rf.bundle);
  const fs::path root(out);
  write_bundle(root / "instance", problem);

  GammaSearchConfig gs;
  gs.solver = sf.config();
  const auto search = find_gamma_for_sparsity(problem, rf.sparsity, gs);
  if (!search.exact) std::cerr << "warning: " << search.warning << '\n';

  RaceConfig rc;
  rc.solvers = kinds;
  rc.solver = sf.config();
  rc.time_budget = rf.time_budget;
  rc.gap_floor = rf.gap_floor;
  rc.parallel = rf.parallel;
  const RaceResult race = run_race(problem, search.gamma, rc);

  fs::create_directories(root / "traces");
  std::map<std::string, SolverTrace> traces;
  write_trace(root / "traces" / "reference.csv", race.reference.trace);
  for (const auto& [name, sol] : race.runs) {
    write_trace(root / "traces" / (name + ".csv"), sol.trace);
    traces[name] = sol.trace;
  }
  const auto plots = emit_plot_data(traces, root / "plots");

  auto manifest = detail::open_out(root / "manifest.txt");
  manifest << "# convergence race\n"
           << "K = " << problem.num_params() << '\n'
           << "N = " << problem.size() << '\n'
           << "seed = " << rf.seed << '\n'
           << "sparsity = " << rf.sparsity << '\n'
           << "gamma = " << detail::format_double(search.gamma) << '\n'
           << "nnz = " << search.nnz << '\n'
           << "phi_star = " << detail::format_double(race.phi_star) << '\n'
           << "reference_kkt = " << detail::format_double(race.reference.kkt_residual) << '\n'
           << "checksum = " << race.checksum << '\n'
           << "mode = " << (race.parallel ? "parallel (timings share cores; not a fair race)" : "sequential") << '\n'
           << "gap_level = " << rf.gap_level << '\n';
  std::cout << "gamma = " << search.gamma << " (nnz " << search.nnz << "), phi* = " << race.phi_star << '\n';
  for (const auto& [name, sol] : race.runs) {
    const auto t = time_to_gap(sol.trace, rf.gap_level);
    manifest << "time_to_gap." << name << " = " << (t ? detail::format_double(*t) : std::string("none")) << '\n';
    manifest << "dropped_plot_rows." << name << " = " << plots.dropped.at(name) << '\n';
    std::cout << "  " << name << ": " << sol.iterations << " iterations, stop = " << sol.stop_reason
              << ", time to gap " << rf.gap_level << ": " << (t ? std::to_string(*t) + " s" : "not reached")
              << '\n';
  }
  return kExitOk;
}

int cmd_gamma_search(const BundleFlags& bf, const SolverFlags& sf, std::optional<Index> nonzero,
                     std::optional<double> sparsity, const std::string& out) {
  const Problem problem = bf.load();
  if (nonzero.has_value() == sparsity.has_value())
    throw UsageError("give exactly one of --nonzero and --sparsity");
  GammaSearchConfig gs;
  gs.solver = sf.config();
  const auto result = nonzero ? fit_with_support_size(problem, *nonzero, gs)
                              : find_gamma_for_sparsity(problem, *sparsity, gs);
  fs::create_directories(out);
  const Problem fitted = problem.with_gamma(result.gamma);
  write_solution(fs::path(out) / "solution.txt", result.solution, fitted, "sista");
  auto g = detail::open_out(fs::path(out) / "gamma.txt");
  g << "gamma = " << detail::format_double(result.gamma) << '\n'
    << "target = " << result.target << '\n'
    << "nnz = " << result.nnz << '\n'
    << "exact = " << (result.exact ? 1 : 0) << '\n'
    << "fits = " << result.fits << '\n';
  if (!result.exact) std::cerr << "warning: " << result.warning << '\n';
  std::cout << "gamma = " << result.gamma << ", nnz = " << result.nnz << " (target " << result.target
            << ")\n";
  for (Index k = 0; k < result.solution.beta.size(); ++k) {
    if (result.solution.beta(k) != 0.0)
      std::cout << "  " << problem.names()[k] << " = " << result.solution.beta(k) << '\n';
  }
  return result.solution.converged ? kExitOk : kExitUnconverged;
}

int cmd_bootstrap(const BundleFlags& bf, const SolverFlags& sf, int replicates, std::uint64_t seed,
                  std::uint64_t sample_size, bool no_resample, unsigned threads,
                  const std::string& out) {
  const Problem problem = bf.load();
  BootstrapConfig bc;
  bc.replicates = replicates;
  bc.seed = seed;
  bc.sample_size = sample_size;
  bc.resample = !no_resample;
  bc.solver = sf.config();
  bc.threads = threads;
  const auto result = bootstrap_se(problem, problem.gamma(), bc);
  fs::create_directories(out);
  write_se_report(fs::path(out) / "report.csv", problem.names(), result.estimate, result.se);
  std::cout << "bootstrap: " << result.replicates.size() << " replicates used, " << result.dropped
            << " dropped\n";
  for (Index k = 0; k < result.estimate.size(); ++k) {
    std::cout << "  " << problem.names()[k] << "  " << result.estimate(k) << " (" << result.se(k)
              << ")\n";
  }
  return kExitOk;
}

int cmd_validate(const BundleFlags& bf, bool strict_centering) {
  const Problem problem = bf.load();
  auto report = check_assumptions(problem);
  if (strict_centering) {
    double raw_violation = 0.0;
    for (const auto& d : problem.basis().raw) {
      raw_violation = std::max({raw_violation, d.rowwise().sum().cwiseAbs().maxCoeff(),
                                d.colwise().sum().cwiseAbs().maxCoeff()});
    }
    if (raw_violation > 1e-10) {
      report.violations.push_back("row and column zero sum conditions violated by the stored basis (max |sum| = " +
                                  std::to_string(raw_violation) + ")");
    }
  }
  std::cout << "N = " << problem.size() << ", K = " << problem.num_params()
            << ", support cells = " << problem.plan().support_size() << '\n'
            << "centering: max |row/column sum| = " << report.max_centering_violation << '\n'
            << "independence: Gram eigenvalues in [" << report.min_gram_eigenvalue << ", "
            << report.max_gram_eigenvalue << "]\n"
            << "zero observed entries: " << report.zero_entries << " (support mode "
            << to_string(problem.plan().mode) << ")\n";
  if (report.ok()) {
    std::cout << "all assumptions hold\n";
    return kExitOk;
  }
  for (const auto& v : report.violations) std::cout << "FAILED: " << v << '\n';
  return kExitData;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learn sparse transport costs from an observed transport plan"};
  app.require_subcommand(1);
  std::string out = default_out_dir();

  auto* sim = app.add_subcommand("simulate", "Write a synthetic problem bundle");
  Index sim_k = 0, sim_n = 0;
  std::uint64_t sim_seed = 0;
  double sim_gamma = 0.0;
  sim->add_option("--K", sim_k, "Number of basis matrices")->required()->check(CLI::PositiveNumber);
  sim->add_option("--N", sim_n, "Plan size")->required()->check(CLI::PositiveNumber);
  sim->add_option("--seed", sim_seed, "Random seed")->capture_default_str();
  sim->add_option("--gamma", sim_gamma, "L1 weight stored in the manifest")->check(CLI::NonNegativeNumber);
  sim->add_option("--out-dir", out, "Output directory (default $SISTA_OUT_DIR or sista_out)");

  auto* build = app.add_subcommand("build", "Build a bundle from a plan and characteristics files");
  std::string b_plan, b_x, b_y, b_builder = "diag", b_support = "structural";
  double b_gamma = 0.0;
  build->add_option("--plan", b_plan, "Observed plan matrix file")->required()->check(CLI::ExistingFile);
  build->add_option("--x", b_x, "Origin characteristics")->required()->check(CLI::ExistingFile);
  build->add_option("--y", b_y, "Destination characteristics")->required()->check(CLI::ExistingFile);
  build->add_option("--builder", b_builder, "Basis builder")->check(CLI::IsMember({"diag", "cross"}))->capture_default_str();
  build->add_option("--gamma", b_gamma, "L1 weight")->check(CLI::NonNegativeNumber);
  build->add_option("--support", b_support, "Support mode")->check(CLI::IsMember({"structural", "full"}))->capture_default_str();
  build->add_option("--out-dir", out, "Output directory");

  auto* fit = app.add_subcommand("fit", "Fit beta on a bundle");
  BundleFlags fit_bundle;
  SolverFlags fit_solver;
  std::string fit_kind = "sista";
  fit_bundle.add(fit);
  fit_solver.add(fit);
  fit->add_option("--solver", fit_kind, "Solver")->check(CLI::IsMember({"sista", "ista", "cd"}))->capture_default_str();
  fit->add_option("--out-dir", out, "Output directory");

  auto* race = app.add_subcommand("race", "Timed convergence race between solvers");
  RaceFlags rf;
  SolverFlags race_solver;
  race->add_option("--K", rf.k, "Number of basis matrices")->check(CLI::PositiveNumber)->capture_default_str();
  race->add_option("--N", rf.n, "Plan size")->check(CLI::PositiveNumber)->capture_default_str();
  race->add_option("--sparsity", rf.sparsity, "Target fraction of nonzero beta")->check(CLI::Range(1e-12, 1.0))->capture_default_str();
  race->add_option("--seed", rf.seed, "Random seed")->capture_default_str();
  race->add_option("--solvers", rf.solvers, "Comma-separated solvers")->capture_default_str();
  race->add_option("--bundle", rf.bundle, "Use this bundle instead of a synthetic instance")->check(CLI::ExistingDirectory);
  race->add_option("--time-budget", rf.time_budget, "Seconds per solver")->check(CLI::PositiveNumber)->capture_default_str();
  race->add_option("--gap-floor", rf.gap_floor, "Stop a solver once its gap is below this")->check(CLI::PositiveNumber)->capture_default_str();
  race->add_option("--gap-level", rf.gap_level, "Gap level for the time-to-gap summary")->check(CLI::PositiveNumber)->capture_default_str();
  race->add_flag("--parallel", rf.parallel, "Run solvers on separate threads");
  race->add_option("--out-dir", out, "Output directory");
  race_solver.add(race);

  auto* gsearch = app.add_subcommand("gamma-search", "Find gamma for a target number of nonzeros");
  BundleFlags gs_bundle;
  SolverFlags gs_solver;
  std::optional<Index> gs_nonzero;
  std::optional<double> gs_sparsity;
  gs_bundle.add(gsearch, false);
  gs_solver.add(gsearch);
  gsearch->add_option("--nonzero", gs_nonzero, "Target number of nonzero components")->check(CLI::NonNegativeNumber);
  gsearch->add_option("--sparsity", gs_sparsity, "Target fraction of nonzero components")->check(CLI::Range(1e-12, 1.0));
  gsearch->add_option("--out-dir", out, "Output directory");

  auto* boot = app.add_subcommand("bootstrap", "Bootstrap standard errors at fixed gamma");
  BundleFlags boot_bundle;
  SolverFlags boot_solver;
  int boot_b = 1000;
  std::uint64_t boot_seed = 0;
  std::uint64_t boot_m = 1000000;
  bool boot_no_resample = false;
  unsigned boot_threads = 1;
  boot_bundle.add(boot);
  boot_solver.add(boot);
  boot->add_option("--replicates", boot_b, "Number of bootstrap replicates")->check(CLI::Range(2, 100000000))->capture_default_str();
  boot->add_option("--seed", boot_seed, "Random seed")->capture_default_str();
  boot->add_option("--sample-size", boot_m, "Pseudo-observations per replicate")->check(CLI::PositiveNumber)->capture_default_str();
  boot->add_flag("--no-resample", boot_no_resample, "Reuse the observed plan in every replicate");
  boot->add_option("--threads", boot_threads, "Worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  boot->add_option("--out-dir", out, "Output directory");

  auto* validate = app.add_subcommand("validate", "Check the structural assumptions of a bundle");
  BundleFlags val_bundle;
  bool strict_centering = false;
  val_bundle.add(validate, false);
  validate->add_flag("--strict-centering", strict_centering, "Require the stored basis itself to be centered");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*sim) return cmd_simulate(sim_k, sim_n, sim_seed, sim_gamma, out);
    if (*build) return cmd_build(b_plan, b_x, b_y, b_builder, b_gamma, b_support, out);
    if (*fit) return cmd_fit(fit_bundle, fit_solver, fit_kind, out);
    if (*race) return cmd_race(rf, race_solver, out);
    if (*gsearch) return cmd_gamma_search(gs_bundle, gs_solver, gs_nonzero, gs_sparsity, out);
    if (*boot)
      return cmd_bootstrap(boot_bundle, boot_solver, boot_b, boot_seed, boot_m, boot_no_resample,
                           boot_threads, out);
    if (*validate) return cmd_validate(val_bundle, strict_centering);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const sista::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
