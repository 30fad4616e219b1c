#pragma once

// Input construction: plan normalization and support extraction, basis
// centering, and basis builders from characteristic vectors.

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "sista/error.hpp"
#include "sista/matrix_io.hpp"
#include "sista/types.hpp"

namespace sista {

// Normalizes `raw` to unit mass and derives margins and the support mask.
// Throws InvalidProblem on negative/non-finite entries, zero total mass or a
// zero row/column margin.
inline ObservedPlan make_observed_plan(const Matrix& raw,
                                       SupportMode mode = SupportMode::structural) {
  if (raw.rows() != raw.cols() || raw.rows() == 0) {
    throw DimensionError("observed plan must be a nonempty square matrix, got " +
                         std::to_string(raw.rows()) + "x" + std::to_string(raw.cols()));
  }
  if (!raw.allFinite()) throw InvalidProblem("observed plan has non-finite entries");
  if ((raw.array() < 0.0).any()) throw InvalidProblem("observed plan has negative entries");
  const double mass = raw.sum();
  if (!(mass > 0.0)) throw InvalidProblem("observed plan has zero total mass");

  ObservedPlan plan;
  plan.mode = mode;
  plan.entries = raw / mass;
  plan.p = plan.entries.rowwise().sum();
  plan.q = plan.entries.colwise().sum().transpose();
  for (Index i = 0; i < plan.p.size(); ++i) {
    if (!(plan.p(i) > 0.0)) throw InvalidProblem("zero row margin at row " + std::to_string(i));
    if (!(plan.q(i) > 0.0))
      throw InvalidProblem("zero column margin at column " + std::to_string(i));
  }
  if (mode == SupportMode::structural) {
    plan.support = (plan.entries.array() > 0.0).cast<double>().matrix();
  } else {
    plan.support = Matrix::Ones(raw.rows(), raw.cols());
  }
  return plan;
}

// Like make_observed_plan, but with a support mask fixed in advance (zero
// entries inside the mask stay in the support). Used for resampled plans.
inline ObservedPlan make_observed_plan_on_support(const Matrix& raw, const Matrix& support,
                                                  SupportMode mode) {
  ObservedPlan plan = make_observed_plan(raw, SupportMode::full);
  detail::require_dims(support.rows() == raw.rows() && support.cols() == raw.cols(),
                       "support mask must match the plan");
  if (((support.array() == 0.0) && (raw.array() != 0.0)).any())
    throw InvalidProblem("plan has mass outside the support mask");
  plan.support = support;
  plan.mode = mode;
  return plan;
}

inline ObservedPlan load_plan(const std::filesystem::path& path,
                              SupportMode mode = SupportMode::structural) {
  return make_observed_plan(read_matrix(path), mode);
}

// Replaces each dᵏ by d̃ᵏ_ij = dᵏ_ij − aᵏ_i − bᵏ_j with
//   aᵏ_i = mean_j dᵏ_ij,  bᵏ_j = mean_i dᵏ_ij − mean_ij dᵏ_ij,
// which has zero row and column sums.
inline DissimilarityBasis center_basis(std::vector<Matrix> raw) {
  if (raw.empty()) throw DimensionError("basis must contain at least one matrix");
  const Index n = raw.front().rows();
  const Index k_count = static_cast<Index>(raw.size());
  for (const auto& d : raw) {
    detail::require_dims(d.rows() == n && d.cols() == n && n > 0,
                         "basis matrices must be square and of equal size");
  }

  DissimilarityBasis basis;
  basis.centered.resize(n * n, k_count);
  basis.row_offsets.resize(n, k_count);
  basis.col_offsets.resize(n, k_count);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (Index k = 0; k < k_count; ++k) {
    const Matrix& d = raw[k];
    Vector a = d.rowwise().sum() * inv_n;
    Vector b = d.colwise().sum().transpose() * inv_n;
    b.array() -= d.sum() * inv_n * inv_n;
    Eigen::Map<Matrix> out(basis.centered.col(k).data(), n, n);
    out = d;
    out.colwise() -= a;
    out.rowwise() -= b.transpose();
    basis.row_offsets.col(k) = a;
    basis.col_offsets.col(k) = b;
  }
  basis.raw = std::move(raw);
  return basis;
}

// dᵏ_ij = (x_ik − y_jk)², one matrix per characteristic.
inline std::vector<Matrix> build_basis_diag(const Matrix& x, const Matrix& y) {
  detail::require_dims(x.rows() == y.rows() && x.cols() == y.cols() && x.cols() > 0,
                       "origin and destination characteristic tables must have equal shape");
  if (!x.allFinite() || !y.allFinite()) throw InvalidProblem("non-finite characteristics");
  const Index n = x.rows();
  std::vector<Matrix> out;
  out.reserve(x.cols());
  for (Index k = 0; k < x.cols(); ++k) {
    Matrix d(n, n);
    for (Index j = 0; j < n; ++j)
      d.col(j) = (x.col(k).array() - y(j, k)).square().matrix();
    out.push_back(std::move(d));
  }
  return out;
}

// d^{rs}_ij = (x_ir − y_js)² for every ordered pair (r, s), flattened
// row-major: index r * P + s (zero-based).
inline std::vector<Matrix> build_basis_cross(const Matrix& x, const Matrix& y) {
  detail::require_dims(x.rows() == y.rows() && x.cols() == y.cols() && x.cols() > 0,
                       "origin and destination characteristic tables must have equal shape");
  if (!x.allFinite() || !y.allFinite()) throw InvalidProblem("non-finite characteristics");
  const Index n = x.rows();
  const Index p = x.cols();
  std::vector<Matrix> out;
  out.reserve(p * p);
  for (Index r = 0; r < p; ++r) {
    for (Index s = 0; s < p; ++s) {
      Matrix d(n, n);
      for (Index j = 0; j < n; ++j)
        d.col(j) = (x.col(r).array() - y(j, s)).square().matrix();
      out.push_back(std::move(d));
    }
  }
  return out;
}

}  // namespace sista
