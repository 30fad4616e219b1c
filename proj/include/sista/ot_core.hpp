#pragma once

// Entropic OT dual objective, gradients, exact Sinkhorn block updates and
// plan reconstruction for a parametric cost c^β = Σ_k β_k d̃ᵏ.
//
// Every sum ranges over the support mask of the observed plan. Exponentials
// of the dual variable Λ_ij = u_i + v_j − c_ij are formed directly for plans
// (with an explicit range check) and through max-shifted log-sum-exp inside
// the Sinkhorn updates.

#include <cmath>
#include <limits>
#include <string>

#include "sista/error.hpp"
#include "sista/problem.hpp"
#include "sista/types.hpp"

namespace sista {

// Largest exponent accepted when materializing a plan entry.
inline constexpr double kMaxExponent = 709.0;

namespace detail {

inline void check_beta(const DissimilarityBasis& basis, const CostParams& beta) {
  require_dims(beta.size() == basis.size(), "beta has length " + std::to_string(beta.size()) +
                                                ", basis has " + std::to_string(basis.size()) +
                                                " matrices");
}

inline void check_potentials(const Problem& problem, const Vector& u, const Vector& v) {
  require_dims(u.size() == problem.size() && v.size() == problem.size(),
               "potentials must have length N = " + std::to_string(problem.size()));
}

// Flattened (column-major) cost; only nonzero weights contribute.
inline Vector cost_vector(const DissimilarityBasis& basis, const CostParams& beta) {
  check_beta(basis, beta);
  Vector c = Vector::Zero(basis.centered.rows());
  for (Index k = 0; k < beta.size(); ++k) {
    if (beta(k) != 0.0) c.noalias() += beta(k) * basis.centered.col(k);
  }
  return c;
}

inline Matrix exponent(const Vector& u, const Vector& v, const Matrix& cost) {
  Matrix lam = -cost;
  lam.colwise() += u;
  lam.rowwise() += v.transpose();
  return lam;
}

// π = exp(Λ) on the support, 0 elsewhere.
inline Matrix plan_from_exponent(const Matrix& lam, const Matrix& support) {
  const auto on = support.array() != 0.0;
  const double top =
      on.select(lam.array(), -std::numeric_limits<double>::infinity()).maxCoeff();
  if (!(top <= kMaxExponent)) {
    throw OverflowError("plan exponent " + std::to_string(top) + " exceeds safe range");
  }
  return on.select(lam.array().exp(), 0.0).matrix();
}

inline Matrix plan_from_cost(const Problem& problem, const Vector& u, const Vector& v,
                             const Matrix& cost) {
  return plan_from_exponent(exponent(u, v, cost), problem.plan().support);
}

inline double objective_from_plan(const Problem& problem, const Matrix& lam, const Matrix& pi) {
  return pi.sum() - (problem.plan().entries.array() * lam.array()).sum();
}

inline double objective_from_cost(const Problem& problem, const Vector& u, const Vector& v,
                                  const Matrix& cost, Matrix* pi_out = nullptr) {
  Matrix lam = exponent(u, v, cost);
  Matrix pi = plan_from_exponent(lam, problem.plan().support);
  const double f = objective_from_plan(problem, lam, pi);
  if (pi_out) *pi_out = std::move(pi);
  return f;
}

// ∇_β F = Σ_{I⁺} (π̂ − π) d̃ᵏ.
inline Vector grad_beta_from_plan(const Problem& problem, const Matrix& pi) {
  const Matrix residual = problem.plan().entries - pi;
  const Eigen::Map<const Vector> flat(residual.data(), residual.size());
  return problem.basis().centered.transpose() * flat;
}

inline Vector u_update_from_cost(const Problem& problem, const Vector& v, const Matrix& cost) {
  const auto& plan = problem.plan();
  Matrix a = -cost;
  a.rowwise() += v.transpose();
  const auto on = plan.support.array() != 0.0;
  const double neg_inf = -std::numeric_limits<double>::infinity();
  a = on.select(a.array(), neg_inf).matrix();
  const Vector m = a.rowwise().maxCoeff();
  Vector u(plan.size());
  for (Index i = 0; i < plan.size(); ++i) {
    if (m(i) == neg_inf) throw InvalidProblem("empty support in row " + std::to_string(i));
  }
  a.colwise() -= m;
  const Vector s = on.select(a.array().exp(), 0.0).rowwise().sum();
  u = plan.p.array().log() - m.array() - s.array().log();
  return u;
}

inline Vector v_update_from_cost(const Problem& problem, const Vector& u, const Matrix& cost) {
  const auto& plan = problem.plan();
  Matrix a = -cost;
  a.colwise() += u;
  const auto on = plan.support.array() != 0.0;
  const double neg_inf = -std::numeric_limits<double>::infinity();
  a = on.select(a.array(), neg_inf).matrix();
  const Vector m = a.colwise().maxCoeff().transpose();
  for (Index j = 0; j < plan.size(); ++j) {
    if (m(j) == neg_inf) throw InvalidProblem("empty support in column " + std::to_string(j));
  }
  a.rowwise() -= m.transpose();
  const Vector s = on.select(a.array().exp(), 0.0).colwise().sum().transpose();
  Vector v = plan.q.array().log() - m.array() - s.array().log();
  return v;
}

inline Matrix as_matrix(const Vector& flat, Index n) {
  return Eigen::Map<const Matrix>(flat.data(), n, n);
}

}  // namespace detail

// c^β_ij = Σ_k β_k d̃ᵏ_ij.
inline Matrix cost_matrix(const DissimilarityBasis& basis, const CostParams& beta) {
  return detail::as_matrix(detail::cost_vector(basis, beta), basis.dim());
}

// π^β_ij = exp(u_i + v_j − c^β_ij) on the support, 0 elsewhere.
inline Matrix transport_plan(const Vector& u, const Vector& v, const CostParams& beta,
                             const Problem& problem) {
  detail::check_potentials(problem, u, v);
  return detail::plan_from_cost(problem, u, v, cost_matrix(problem.basis(), beta));
}

inline Matrix transport_plan(const Potentials& pot, const CostParams& beta,
                             const Problem& problem) {
  return transport_plan(pot.u, pot.v, beta, problem);
}

// F(u,v,β) = Σ_{I⁺} exp(u_i+v_j−c^β_ij) + Σ_{I⁺} π̂_ij (c^β_ij − u_i − v_j).
inline double dual_objective(const Vector& u, const Vector& v, const CostParams& beta,
                             const Problem& problem) {
  detail::check_potentials(problem, u, v);
  return detail::objective_from_cost(problem, u, v, cost_matrix(problem.basis(), beta));
}

// Φ = F + γ |β|₁.
inline double penalized_objective(const Vector& u, const Vector& v, const CostParams& beta,
                                  const Problem& problem) {
  return dual_objective(u, v, beta, problem) + problem.gamma() * beta.lpNorm<1>();
}

inline Vector grad_beta(const Vector& u, const Vector& v, const CostParams& beta,
                        const Problem& problem) {
  return detail::grad_beta_from_plan(problem, transport_plan(u, v, beta, problem));
}

struct PotentialGradient {
  Vector du;  // ∂F/∂u_i = Σ_j (π_ij − π̂_ij)
  Vector dv;  // ∂F/∂v_j = Σ_i (π_ij − π̂_ij)
};

inline PotentialGradient grad_uv(const Vector& u, const Vector& v, const CostParams& beta,
                                 const Problem& problem) {
  const Matrix residual = transport_plan(u, v, beta, problem) - problem.plan().entries;
  return {residual.rowwise().sum(), residual.colwise().sum().transpose()};
}

// r_k = Σ_{I⁺} π^β_ij d̃ᵏ_ij − Σ_{I⁺} π̂_ij d̃ᵏ_ij.
inline Vector moment_residuals(const Vector& u, const Vector& v, const CostParams& beta,
                               const Problem& problem) {
  return -grad_beta(u, v, beta, problem);
}

// Exact minimization of F in u: exp(u_i) = p_i / Σ_{j∈I⁺_i} exp(v_j − c_ij).
inline Vector sinkhorn_u_update(const Vector& v, const CostParams& beta, const Problem& problem) {
  detail::require_dims(v.size() == problem.size(), "v must have length N");
  return detail::u_update_from_cost(problem, v, cost_matrix(problem.basis(), beta));
}

// Exact minimization of F in v: exp(v_j) = q_j / Σ_{i∈I⁺_j} exp(u_i − c_ij).
inline Vector sinkhorn_v_update(const Vector& u, const CostParams& beta, const Problem& problem) {
  detail::require_dims(u.size() == problem.size(), "u must have length N");
  return detail::v_update_from_cost(problem, u, cost_matrix(problem.basis(), beta));
}

// Imposes u(0) = 0 using the invariance (u + m, v − m).
inline void normalize(Vector& u, Vector& v) {
  const double shift = u(0);
  u.array() -= shift;
  v.array() += shift;
}

inline Potentials normalized(Potentials pot) {
  normalize(pot.u, pot.v);
  pot.normalized = true;
  return pot;
}

struct SinkhornResult {
  Potentials potentials;
  int iterations = 0;
  double margin_violation = 0.0;  // max |row sum − p_i| after the last sweep
  bool converged = false;
};

namespace detail {

inline SinkhornResult sinkhorn_from_cost(const Problem& problem, const Matrix& cost, double tol,
                                         int max_iter, Potentials init) {
  if (!(tol > 0.0)) throw InvalidProblem("sinkhorn tolerance must be positive");
  SinkhornResult best;
  best.margin_violation = std::numeric_limits<double>::infinity();
  Vector u = std::move(init.u);
  Vector v = std::move(init.v);
  for (int it = 1; it <= max_iter; ++it) {
    u = u_update_from_cost(problem, v, cost);
    v = v_update_from_cost(problem, u, cost);
    normalize(u, v);
    // Column margins are exact after the v update; rows carry the error.
    const Matrix pi = plan_from_cost(problem, u, v, cost);
    const double viol = (pi.rowwise().sum() - problem.plan().p).cwiseAbs().maxCoeff();
    if (viol < best.margin_violation) {
      best.potentials = {u, v, true};
      best.margin_violation = viol;
      best.iterations = it;
    }
    if (viol <= tol) {
      best.potentials = {u, v, true};
      best.margin_violation = viol;
      best.iterations = it;
      best.converged = true;
      return best;
    }
  }
  if (best.iterations == 0) best.potentials = {u, v, false};
  return best;
}

}  // namespace detail

// Alternates exact u/v updates at fixed β until the row margins match p
// within `tol` (columns are exact after every sweep). On hitting
// `max_iter` the iterate with the smallest violation is returned with
// converged == false.
inline SinkhornResult sinkhorn_solve(const CostParams& beta, const Problem& problem, double tol,
                                     int max_iter, const Potentials* init = nullptr) {
  Potentials start = init ? *init : Potentials::zeros(problem.size());
  detail::check_potentials(problem, start.u, start.v);
  return detail::sinkhorn_from_cost(problem, cost_matrix(problem.basis(), beta), tol, max_iter,
                                    std::move(start));
}

}  // namespace sista
