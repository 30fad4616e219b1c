#pragma once

// Solvers for min Φ(u,v,β) = F(u,v,β) + γ|β|₁:
//
//   sista_solve  exact Sinkhorn sweep in (u,v), then one proximal gradient
//                step in β
//   ista_solve   joint gradient step in (u,v) and proximal step in β
//   cd_solve     Sinkhorn sweep in (u,v), then exact univariate minimization
//                of every β_k by bisection
//
// All three share the same stopping rules, trace schema and Solution type.

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sista/error.hpp"
#include "sista/ot_core.hpp"
#include "sista/problem.hpp"
#include "sista/prox.hpp"
#include "sista/types.hpp"

namespace sista {

enum class StepPolicy { fixed, backtracking };

struct SolverConfig {
  double rho = 1.0;  // initial step for β
  StepPolicy step_policy = StepPolicy::backtracking;
  double shrink = 0.5;               // backtracking factor, in (0,1)
  double sufficient_decrease = 1.0;  // σ in F(x⁺) ≤ F(x) + ∇F·Δ + σ|Δ|²/(2ρ), in (0,1]
  double expand = 1.5;               // step growth after each accepted step
  double rho_min = 1e-12;
  double rho_max = 1e12;

  int max_iter = 100000;
  double tol_kkt = 1e-8;
  // Secondary stop: relative Φ change at most tol_obj while the KKT residual
  // has not improved for stall_window iterations.
  double tol_obj = 1e-15;
  int stall_window = 100;

  std::vector<SignConstraint> signs;  // empty: plain L1

  // ISTA: step on (u,v) is uv_step_scale times the β step.
  double uv_step_scale = 1.0;

  // Coordinate descent bisection.
  double cd_bracket = 1.0;
  double cd_max_width = 1152921504606846976.0;  // 2^60
  double cd_tol = 1e-10;
  int cd_max_bisections = 200;

  // Benchmark hooks. With a reference optimum the trace carries the gap
  // |Φ_t − Φ*| and the run stops once gap ≤ gap_tol (when gap_tol > 0).
  std::optional<double> reference_phi;
  double gap_tol = 0.0;
  double time_budget = std::numeric_limits<double>::infinity();  // seconds
  bool record_trace = true;

  void validate() const {
    if (!(rho > 0.0)) throw InvalidProblem("step rho must be positive");
    if (!(shrink > 0.0 && shrink < 1.0)) throw InvalidProblem("shrink factor must lie in (0,1)");
    if (!(sufficient_decrease > 0.0 && sufficient_decrease <= 1.0))
      throw InvalidProblem("sufficient-decrease constant must lie in (0,1]");
    if (!(expand >= 1.0)) throw InvalidProblem("expansion factor must be >= 1");
    if (!(rho_min > 0.0) || !(rho_max >= rho_min)) throw InvalidProblem("bad step bounds");
    if (max_iter < 1) throw InvalidProblem("max_iter must be positive");
    if (!(tol_kkt > 0.0) || !(tol_obj > 0.0)) throw InvalidProblem("tolerances must be positive");
    if (!(uv_step_scale > 0.0)) throw InvalidProblem("uv_step_scale must be positive");
    if (!(cd_bracket > 0.0) || !(cd_tol > 0.0)) throw InvalidProblem("bad bisection settings");
  }
};

struct TraceRecord {
  int iteration = 0;
  double elapsed_seconds = 0.0;
  double phi = 0.0;
  double gap = std::numeric_limits<double>::quiet_NaN();
  double kkt = 0.0;
  Index nnz = 0;
  double rho = 0.0;
};

struct SolverTrace {
  std::vector<TraceRecord> records;
};

struct Solution {
  Potentials potentials;
  CostParams beta;
  double phi = 0.0;
  double kkt_residual = 0.0;
  bool converged = false;
  int iterations = 0;
  std::string stop_reason;
  SolverTrace trace;
  // Largest univariate stationarity residual at a bisection exit (cd only).
  double max_inner_residual = 0.0;

  Index nnz() const { return (beta.array() != 0.0).count(); }
};

namespace detail {

inline double kkt_from_gradients(const Vector& du, const Vector& dv, const Vector& gb,
                                 const CostParams& beta, double gamma,
                                 const std::vector<SignConstraint>& signs) {
  double r = 0.0;
  // u(0) is pinned by the normalization.
  if (du.size() > 1) r = du.tail(du.size() - 1).cwiseAbs().maxCoeff();
  r = std::max(r, dv.cwiseAbs().maxCoeff());
  for (Index k = 0; k < beta.size(); ++k) {
    const SignConstraint sc = signs.empty() ? SignConstraint::free : signs[k];
    double viol;
    if (beta(k) > 0.0) {
      viol = std::abs(gb(k) + gamma);
    } else if (beta(k) < 0.0) {
      viol = std::abs(gb(k) - gamma);
    } else if (sc == SignConstraint::nonneg) {
      viol = std::max(0.0, -gb(k) - gamma);
    } else if (sc == SignConstraint::nonpos) {
      viol = std::max(0.0, gb(k) - gamma);
    } else {
      viol = std::max(0.0, std::abs(gb(k)) - gamma);
    }
    r = std::max(r, viol);
  }
  return r;
}

inline double kkt_from_plan(const Problem& problem, const Matrix& pi, const CostParams& beta,
                            double gamma, const std::vector<SignConstraint>& signs,
                            Vector* gb_out = nullptr) {
  const Matrix residual = pi - problem.plan().entries;
  const Vector du = residual.rowwise().sum();
  const Vector dv = residual.colwise().sum().transpose();
  const Eigen::Map<const Vector> flat(residual.data(), residual.size());
  Vector gb = -(problem.basis().centered.transpose() * flat);
  const double r = kkt_from_gradients(du, dv, gb, beta, gamma, signs);
  if (gb_out) *gb_out = std::move(gb);
  return r;
}

inline Vector penalty_prox(const Vector& z, double tau, const std::vector<SignConstraint>& signs) {
  return signs.empty() ? prox_l1(z, tau) : prox_l1_signed(z, tau, signs);
}

// Current point plus its cost matrix (kept consistent with beta).
struct Iterate {
  Vector u;
  Vector v;
  CostParams beta;
  Matrix cost;
};

inline Iterate make_iterate(const Problem& problem, Potentials pot, CostParams beta) {
  check_potentials(problem, pot.u, pot.v);
  check_beta(problem.basis(), beta);
  if (!pot.u.allFinite() || !pot.v.allFinite() || !beta.allFinite())
    throw InvalidProblem("initial point must be finite");
  normalize(pot.u, pot.v);
  Matrix cost = cost_matrix(problem.basis(), beta);
  return {std::move(pot.u), std::move(pot.v), std::move(beta), std::move(cost)};
}

// Σ w·(e^{−x} − 1 + x), the exact second-order remainder of F along a
// change x of the (negated) exponent. Evaluated without cancellation; the
// factors e^{−x} are returned in `exp_neg_x`.
inline double exp_remainder(const Eigen::ArrayXd& w, const Eigen::ArrayXd& x,
                            Eigen::ArrayXd& exp_neg_x) {
  exp_neg_x = (-x).exp();
  const Eigen::ArrayXd x2 = x.square();
  const Eigen::ArrayXd series = x2 * (0.5 - x * (1.0 / 6.0 - x * (1.0 / 24.0 - x / 120.0)));
  const Eigen::ArrayXd direct = (exp_neg_x - 1.0) + x;
  return (w != 0.0).select(w * (x.abs() < 1e-3).select(series, direct), 0.0).sum();
}

inline Eigen::Map<const Eigen::ArrayXd> flat_array(const Matrix& m) {
  return {m.data(), m.size()};
}

inline Eigen::Map<Eigen::ArrayXd> flat_array_mut(Matrix& m) { return {m.data(), m.size()}; }

// π ⊙ factor, keeping zero entries at zero even where the factor overflowed.
inline Matrix scale_plan(const Matrix& pi, const Eigen::ArrayXd& factor) {
  Matrix out(pi.rows(), pi.cols());
  const auto p = flat_array(pi);
  flat_array_mut(out) = (p != 0.0).select(p * factor, 0.0);
  return out;
}

// Owns the clock, the trace and the stopping rules of a solver run.
class Monitor {
 public:
  Monitor(const Problem& problem, const SolverConfig& config)
      : problem_(problem), config_(config), start_(Clock::now()) {}

  double elapsed() const {
    return std::chrono::duration<double>(Clock::now() - start_).count() - paused_;
  }

  // Records iteration t at point x; returns true when the run should stop.
  bool observe(int t, const Iterate& x, double phi, double kkt, double rho) {
    const double now = elapsed();
    const auto pause_begin = Clock::now();
    TraceRecord rec;
    rec.iteration = t;
    rec.elapsed_seconds = now;
    rec.phi = phi;
    rec.kkt = kkt;
    rec.nnz = (x.beta.array() != 0.0).count();
    rec.rho = rho;
    if (config_.reference_phi) rec.gap = std::abs(phi - *config_.reference_phi);
    if (config_.record_trace) trace_.records.push_back(rec);

    if (!best_ || phi < best_phi_ || (phi == best_phi_ && kkt < best_kkt_at_phi_)) {
      best_ = Potentials{x.u, x.v, true};
      best_beta_ = x.beta;
      best_phi_ = phi;
      best_kkt_at_phi_ = kkt;
    }
    if (kkt < best_kkt_ * 0.999) {
      best_kkt_ = kkt;
      since_kkt_improved_ = 0;
    } else {
      ++since_kkt_improved_;
    }
    last_ = {x.u, x.v, true};
    last_beta_ = x.beta;
    last_kkt_ = kkt;
    iterations_ = t;

    bool stop = false;
    if (kkt <= config_.tol_kkt) {
      reason_ = "kkt";
      stop = true;
    } else if (config_.reference_phi && config_.gap_tol > 0.0 && rec.gap <= config_.gap_tol) {
      reason_ = "gap";
      stop = true;
    } else if (now >= config_.time_budget) {
      reason_ = "time_budget";
      stop = true;
    } else if (t > 0 && since_kkt_improved_ >= config_.stall_window &&
               std::abs(phi - prev_phi_) <= config_.tol_obj * std::max(1.0, std::abs(phi))) {
      reason_ = "stalled";
      stop = true;
    } else if (t >= config_.max_iter) {
      reason_ = "max_iter";
      stop = true;
    }
    prev_phi_ = phi;
    paused_ += std::chrono::duration<double>(Clock::now() - pause_begin).count();
    return stop;
  }

  Solution finish() {
    Solution sol;
    const bool last_ok = last_kkt_ <= config_.tol_kkt;
    if (last_ok) {
      sol.potentials = std::move(last_);
      sol.beta = std::move(last_beta_);
    } else {
      sol.potentials = std::move(*best_);
      sol.beta = std::move(best_beta_);
    }
    sol.phi = penalized_objective(sol.potentials.u, sol.potentials.v, sol.beta, problem_);
    sol.kkt_residual = kkt_from_plan(problem_, transport_plan(sol.potentials, sol.beta, problem_),
                                     sol.beta, problem_.gamma(), config_.signs);
    sol.converged = sol.kkt_residual <= config_.tol_kkt;
    sol.iterations = iterations_;
    sol.stop_reason = reason_.empty() ? "max_iter" : reason_;
    sol.trace = std::move(trace_);
    return sol;
  }

 private:
  using Clock = std::chrono::steady_clock;
  const Problem& problem_;
  const SolverConfig& config_;
  Clock::time_point start_;
  double paused_ = 0.0;
  SolverTrace trace_;
  std::optional<Potentials> best_;
  CostParams best_beta_;
  double best_phi_ = std::numeric_limits<double>::infinity();
  double best_kkt_at_phi_ = std::numeric_limits<double>::infinity();
  double best_kkt_ = std::numeric_limits<double>::infinity();
  int since_kkt_improved_ = 0;
  Potentials last_;
  CostParams last_beta_;
  double last_kkt_ = std::numeric_limits<double>::infinity();
  double prev_phi_ = std::numeric_limits<double>::quiet_NaN();
  int iterations_ = 0;
  std::string reason_;
};

struct StepOutcome {
  double phi;       // Φ at the new point
  double rho_used;  // accepted step
  Matrix pi;        // plan at the new point
};

// One SISTA iteration in place. `rho` is the trial step.
//
// The backtracking test F(β⁺) − F(β) − ∇F·Δ ≤ σ|Δ|²/(2ρ) is evaluated through
// its exact remainder Σ π (e^{−Δc} − 1 + Δc), which stays accurate when the
// step is tiny.
inline StepOutcome sista_iteration(const Problem& problem, const SolverConfig& config, Iterate& x,
                                   double rho) {
  const double gamma = problem.gamma();
  x.u = u_update_from_cost(problem, x.v, x.cost);
  x.v = v_update_from_cost(problem, x.u, x.cost);
  normalize(x.u, x.v);

  Matrix pi;
  const double f0 = objective_from_cost(problem, x.u, x.v, x.cost, &pi);
  const Vector g = grad_beta_from_plan(problem, pi);
  const auto pi_flat = flat_array(pi);
  const auto target = flat_array(problem.plan().entries);

  const bool backtrack = config.step_policy == StepPolicy::backtracking;
  Eigen::ArrayXd factor;
  while (true) {
    CostParams trial = penalty_prox(x.beta - rho * g, rho * gamma, config.signs);
    const Vector delta = trial - x.beta;
    const Vector dc = cost_vector(problem.basis(), delta);
    const double remainder = exp_remainder(pi_flat, dc.array(), factor);
    const bool finite = std::isfinite(remainder);
    const bool accept = !backtrack ||
                        (finite && remainder <= config.sufficient_decrease *
                                                    delta.squaredNorm() / (2.0 * rho)) ||
                        (finite && rho <= config.rho_min);
    if (accept) {
      if (!finite) throw OverflowError("plan overflow in SISTA step");
      Matrix next_pi = scale_plan(pi, factor);
      const double f1 = f0 + (flat_array(next_pi) - pi_flat).sum() + (target * dc.array()).sum();
      x.beta = std::move(trial);
      flat_array_mut(x.cost) += dc.array();
      return {f1 + gamma * x.beta.lpNorm<1>(), rho, std::move(next_pi)};
    }
    if (rho <= config.rho_min) throw OverflowError("plan overflow in SISTA step");
    rho = std::max(rho * config.shrink, config.rho_min);
  }
}

inline double next_step(double rho_used, const SolverConfig& config) {
  if (config.step_policy == StepPolicy::fixed) return config.rho;
  return std::min(rho_used * config.expand, config.rho_max);
}

}  // namespace detail

// Soft-thresholding optimality residual at a point:
// max(|∇_u F| (u(0) excluded), |∇_v F|, per-component subgradient violation).
inline double kkt_residual(const Vector& u, const Vector& v, const CostParams& beta,
                           const Problem& problem, const std::vector<SignConstraint>& signs = {}) {
  return detail::kkt_from_plan(problem, transport_plan(u, v, beta, problem), beta,
                               problem.gamma(), signs);
}

struct SistaState {
  Vector u;
  Vector v;
  CostParams beta;
  double rho = 1.0;       // trial step for the next iteration
  double last_rho = 0.0;  // step accepted by the last iteration
};

// One Sinkhorn sweep followed by one proximal gradient step in β.
inline SistaState sista_step(SistaState state, const Problem& problem,
                             const SolverConfig& config) {
  config.validate();
  auto x = detail::make_iterate(problem, {std::move(state.u), std::move(state.v), false},
                                std::move(state.beta));
  const auto out = detail::sista_iteration(problem, config, x, state.rho);
  return {std::move(x.u), std::move(x.v), std::move(x.beta), detail::next_step(out.rho_used, config),
          out.rho_used};
}

struct InitialPoint {
  Potentials potentials;
  CostParams beta;

  static InitialPoint zeros(const Problem& problem) {
    return {Potentials::zeros(problem.size()), CostParams::Zero(problem.num_params())};
  }
};

inline Solution sista_solve(const Problem& problem, const SolverConfig& config,
                            std::optional<InitialPoint> init = std::nullopt) {
  config.validate();
  InitialPoint start = init ? std::move(*init) : InitialPoint::zeros(problem);
  auto x = detail::make_iterate(problem, std::move(start.potentials), std::move(start.beta));
  detail::Monitor monitor(problem, config);

  {
    Matrix pi;
    const double f = detail::objective_from_cost(problem, x.u, x.v, x.cost, &pi);
    const double kkt = detail::kkt_from_plan(problem, pi, x.beta, problem.gamma(), config.signs);
    if (monitor.observe(0, x, f + problem.gamma() * x.beta.lpNorm<1>(), kkt, 0.0))
      return monitor.finish();
  }
  double rho = config.rho;
  for (int t = 1;; ++t) {
    const auto out = detail::sista_iteration(problem, config, x, rho);
    const double kkt =
        detail::kkt_from_plan(problem, out.pi, x.beta, problem.gamma(), config.signs);
    rho = detail::next_step(out.rho_used, config);
    if (monitor.observe(t, x, out.phi, kkt, out.rho_used)) break;
  }
  return monitor.finish();
}

// Proximal gradient on the full variable: gradient step in (u,v), soft
// thresholding step in β. The (u,v) step is uv_step_scale times the β step;
// both shrink together during backtracking.
inline Solution ista_solve(const Problem& problem, const SolverConfig& config,
                           std::optional<InitialPoint> init = std::nullopt) {
  config.validate();
  const double gamma = problem.gamma();
  InitialPoint start = init ? std::move(*init) : InitialPoint::zeros(problem);
  auto x = detail::make_iterate(problem, std::move(start.potentials), std::move(start.beta));
  detail::Monitor monitor(problem, config);

  Matrix pi;
  double f = detail::objective_from_cost(problem, x.u, x.v, x.cost, &pi);
  auto gradients = [&](const Matrix& plan, Vector& du, Vector& dv, Vector& gb) {
    const Matrix residual = plan - problem.plan().entries;
    du = residual.rowwise().sum();
    dv = residual.colwise().sum().transpose();
    const Eigen::Map<const Vector> flat(residual.data(), residual.size());
    gb = -(problem.basis().centered.transpose() * flat);
  };
  Vector du, dv, gb;
  gradients(pi, du, dv, gb);
  if (monitor.observe(0, x, f + gamma * x.beta.lpNorm<1>(),
                      detail::kkt_from_gradients(du, dv, gb, x.beta, gamma, config.signs), 0.0))
    return monitor.finish();

  const bool backtrack = config.step_policy == StepPolicy::backtracking;
  const double sigma = config.sufficient_decrease;
  const auto target = detail::flat_array(problem.plan().entries);
  Eigen::ArrayXd factor;
  double rho = config.rho;
  for (int t = 1;; ++t) {
    Vector u1, v1;
    CostParams b1;
    Vector dc;
    Matrix dlam;  // change of −Λ
    while (true) {
      const double rho_uv = rho * config.uv_step_scale;
      u1 = x.u - rho_uv * du;
      v1 = x.v - rho_uv * dv;
      b1 = detail::penalty_prox(x.beta - rho * gb, rho * gamma, config.signs);
      const Vector db = b1 - x.beta;
      dc = detail::cost_vector(problem.basis(), db);
      dlam = detail::as_matrix(dc, problem.size());
      dlam.colwise() -= (u1 - x.u);
      dlam.rowwise() -= (v1 - x.v).transpose();
      // F(x⁺) − F(x) − ∇F·Δ = Σ π (e^{Δ} − 1 − Δ) with Δ the exponent change.
      const double remainder =
          detail::exp_remainder(detail::flat_array(pi), detail::flat_array(dlam), factor);
      const bool finite = std::isfinite(remainder);
      if (!backtrack) {
        if (!finite) throw OverflowError("plan overflow in ISTA step");
        break;
      }
      if (finite) {
        const double model =
            sigma * ((u1 - x.u).squaredNorm() + (v1 - x.v).squaredNorm()) / (2.0 * rho_uv) +
            sigma * db.squaredNorm() / (2.0 * rho);
        if (remainder <= model || rho <= config.rho_min) break;
      } else if (rho <= config.rho_min) {
        throw OverflowError("plan overflow in ISTA step");
      }
      rho = std::max(rho * config.shrink, config.rho_min);
    }
    // Plan and objective at the new point from the exact exponent change.
    Matrix pi1 = detail::scale_plan(pi, factor);
    const Eigen::ArrayXd lam_change = -detail::flat_array(dlam);
    f += (detail::flat_array(pi1) - detail::flat_array(pi)).sum() - (target * lam_change).sum();
    normalize(u1, v1);
    x.u = std::move(u1);
    x.v = std::move(v1);
    x.beta = std::move(b1);
    detail::flat_array_mut(x.cost) += dc.array();
    // The plan is unchanged by the normalization shift.
    pi = std::move(pi1);
    gradients(pi, du, dv, gb);
    const double kkt = detail::kkt_from_gradients(du, dv, gb, x.beta, gamma, config.signs);
    const double used = rho;
    rho = detail::next_step(used, config);
    if (monitor.observe(t, x, f + gamma * x.beta.lpNorm<1>(), kkt, used)) break;
  }
  return monitor.finish();
}

namespace detail {

// ∂F/∂β_k at β_k + shift, holding the rest fixed, given the plan π at shift 0.
struct CoordinateDerivative {
  const Eigen::ArrayXd& target;  // π̂ flattened
  const Eigen::ArrayXd& pi;      // π flattened
  Eigen::Map<const Eigen::ArrayXd> d;

  double operator()(double shift) const {
    if (shift == 0.0) return ((target - pi) * d).sum();
    return ((target - pi * (-shift * d).exp()) * d).sum();
  }
};

struct Bisection {
  double root = 0.0;
  double residual = 0.0;
  bool ok = true;
};

// Root of the increasing function h on (lo, ...) with h(lo) < 0, starting
// from the bracket [lo, start + width] and doubling its width as needed.
template <class H>
Bisection bisect_increasing(const H& h, double lo, double hi, const SolverConfig& config) {
  Bisection out;
  double h_hi = h(hi);
  while (h_hi <= 0.0) {
    const double width = 2.0 * (hi - lo);
    if (!(width <= config.cd_max_width)) {
      out.ok = false;
      out.root = hi;
      out.residual = std::abs(h_hi);
      return out;
    }
    hi = lo + width;
    h_hi = h(hi);
  }
  double mid = 0.5 * (lo + hi);
  double h_mid = h(mid);
  for (int it = 0; it < config.cd_max_bisections; ++it) {
    if (std::abs(h_mid) <= config.cd_tol) break;
    if (h_mid > 0.0) {
      hi = mid;
    } else {
      lo = mid;
    }
    const double next = 0.5 * (lo + hi);
    if (next == lo || next == hi) break;
    mid = next;
    h_mid = h(mid);
  }
  out.root = mid;
  out.residual = std::abs(h_mid);
  return out;
}

}  // namespace detail

// Coordinate descent: Sinkhorn sweep in (u,v), then for every k the exact
// minimizer of Φ in β_k. The kink at zero is handled by the subgradient
// test |∂F/∂β_k(β_k = 0)| ≤ γ before any bisection; otherwise the
// stationarity equation ∂F/∂β_k = ∓γ is solved on the matching half-line.
inline Solution cd_solve(const Problem& problem, const SolverConfig& config,
                         std::optional<InitialPoint> init = std::nullopt) {
  config.validate();
  const double gamma = problem.gamma();
  const Index n = problem.size();
  InitialPoint start = init ? std::move(*init) : InitialPoint::zeros(problem);
  auto x = detail::make_iterate(problem, std::move(start.potentials), std::move(start.beta));
  detail::Monitor monitor(problem, config);
  double max_inner = 0.0;

  {
    Matrix pi;
    const double f = detail::objective_from_cost(problem, x.u, x.v, x.cost, &pi);
    const double kkt = detail::kkt_from_plan(problem, pi, x.beta, gamma, config.signs);
    if (monitor.observe(0, x, f + gamma * x.beta.lpNorm<1>(), kkt, 0.0)) {
      auto sol = monitor.finish();
      sol.max_inner_residual = max_inner;
      return sol;
    }
  }

  const Eigen::Map<const Eigen::ArrayXd> target_map(problem.plan().entries.data(), n * n);
  const Eigen::ArrayXd target = target_map;
  const Eigen::ArrayXd on =
      Eigen::Map<const Eigen::ArrayXd>(problem.plan().support.data(), n * n);
  bool bracket_failed = false;

  for (int t = 1;; ++t) {
    x.u = detail::u_update_from_cost(problem, x.v, x.cost);
    x.v = detail::v_update_from_cost(problem, x.u, x.cost);
    normalize(x.u, x.v);
    const Matrix pi0 = detail::plan_from_cost(problem, x.u, x.v, x.cost);
    Eigen::ArrayXd pi = Eigen::Map<const Eigen::ArrayXd>(pi0.data(), n * n);
    Eigen::Map<Eigen::ArrayXd> cost_flat(x.cost.data(), n * n);

    for (Index k = 0; k < problem.num_params(); ++k) {
      const auto& col = problem.basis().centered.col(k);
      detail::CoordinateDerivative deriv{target, pi, {col.data(), n * n}};
      const double b = x.beta(k);
      const SignConstraint sc = config.signs.empty() ? SignConstraint::free : config.signs[k];
      const double g_zero = deriv(-b);

      double updated = 0.0;
      const bool go_positive = g_zero < -gamma && sc != SignConstraint::nonpos;
      const bool go_negative = g_zero > gamma && sc != SignConstraint::nonneg;
      if (go_positive) {
        // Solve ∂F/∂β_k + γ = 0 for β_k > 0.
        auto h = [&](double beta_k) { return deriv(beta_k - b) + gamma; };
        double lo = std::max(0.0, b - config.cd_bracket);
        if (lo > 0.0 && h(lo) >= 0.0) lo = 0.0;
        const auto r = detail::bisect_increasing(h, lo, std::max(b, lo) + config.cd_bracket, config);
        updated = r.root;
        bracket_failed = bracket_failed || !r.ok;
        max_inner = std::max(max_inner, r.residual);
      } else if (go_negative) {
        // Mirror: solve −∂F/∂β_k(−s) + γ = 0 for s = −β_k > 0.
        auto h = [&](double s) { return -deriv(-s - b) + gamma; };
        const double nb = -b;
        double lo = std::max(0.0, nb - config.cd_bracket);
        if (lo > 0.0 && h(lo) >= 0.0) lo = 0.0;
        const auto r =
            detail::bisect_increasing(h, lo, std::max(nb, lo) + config.cd_bracket, config);
        updated = -r.root;
        bracket_failed = bracket_failed || !r.ok;
        max_inner = std::max(max_inner, r.residual);
      }

      const double delta = updated - b;
      if (delta != 0.0) {
        const Eigen::Map<const Eigen::ArrayXd> d(col.data(), n * n);
        pi *= (-delta * d).exp() * on;
        if (!pi.allFinite()) throw OverflowError("plan overflow in coordinate update");
        cost_flat += delta * d;
        x.beta(k) = updated;
      }
    }

    Matrix pi_now;
    const double f = detail::objective_from_cost(problem, x.u, x.v, x.cost, &pi_now);
    const double kkt = detail::kkt_from_plan(problem, pi_now, x.beta, gamma, config.signs);
    if (monitor.observe(t, x, f + gamma * x.beta.lpNorm<1>(), kkt, 0.0) || bracket_failed) break;
  }
  auto sol = monitor.finish();
  sol.max_inner_residual = max_inner;
  if (bracket_failed) {
    sol.converged = false;
    sol.stop_reason = "bracket_failed";
  }
  return sol;
}

enum class SolverKind { sista, ista, cd };

inline const char* to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::sista: return "sista";
    case SolverKind::ista: return "ista";
    default: return "cd";
  }
}

inline std::optional<SolverKind> parse_solver_kind(const std::string& name) {
  if (name == "sista") return SolverKind::sista;
  if (name == "ista") return SolverKind::ista;
  if (name == "cd") return SolverKind::cd;
  return std::nullopt;
}

inline Solution solve(SolverKind kind, const Problem& problem, const SolverConfig& config,
                      std::optional<InitialPoint> init = std::nullopt) {
  switch (kind) {
    case SolverKind::sista: return sista_solve(problem, config, std::move(init));
    case SolverKind::ista: return ista_solve(problem, config, std::move(init));
    default: return cd_solve(problem, config, std::move(init));
  }
}

}  // namespace sista
