#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "sista/error.hpp"
#include "sista/preprocess.hpp"
#include "sista/types.hpp"

namespace sista {

// An L1-penalized inverse transport problem: observed plan, centered
// dissimilarity basis and penalty weight.
//
// A temperature T != 1 is folded into the basis on construction (every
// matrix is divided by T), so the stored problem always works at T = 1.
// The basis is shared between copies; copying a Problem is cheap.
class Problem {
 public:
  Problem(ObservedPlan plan, std::vector<Matrix> raw_basis, double gamma = 0.0,
          double temperature = 1.0, std::vector<std::string> names = {})
      : plan_(std::move(plan)), gamma_(gamma), temperature_(temperature) {
    if (!(temperature > 0.0) || !std::isfinite(temperature))
      throw InvalidProblem("temperature must be positive");
    if (!(gamma >= 0.0) || !std::isfinite(gamma))
      throw InvalidProblem("gamma must be finite and nonnegative");
    for (auto& d : raw_basis) {
      detail::require_dims(d.rows() == plan_.size() && d.cols() == plan_.size(),
                           "basis matrix size does not match plan size");
      if (!d.allFinite()) throw InvalidProblem("basis matrix has non-finite entries");
      if (temperature != 1.0) d /= temperature;
    }
    basis_ = std::make_shared<const DissimilarityBasis>(center_basis(std::move(raw_basis)));
    names_ = std::move(names);
    if (names_.empty()) {
      for (Index k = 0; k < basis_->size(); ++k) names_.push_back("d" + std::to_string(k + 1));
    }
    detail::require_dims(static_cast<Index>(names_.size()) == basis_->size(),
                         "one name per basis matrix");
  }

  // Same basis, different observed plan (bootstrap replicates).
  Problem(ObservedPlan plan, const Problem& like)
      : plan_(std::move(plan)),
        basis_(like.basis_),
        gamma_(like.gamma_),
        temperature_(like.temperature_),
        names_(like.names_) {
    detail::require_dims(plan_.size() == like.size(), "replicate plan size");
  }

  const ObservedPlan& plan() const { return plan_; }
  const DissimilarityBasis& basis() const { return *basis_; }
  const std::vector<std::string>& names() const { return names_; }

  double gamma() const { return gamma_; }
  // Temperature given at construction; already folded into the basis.
  double temperature() const { return temperature_; }

  Index size() const { return plan_.size(); }
  Index num_params() const { return basis_->size(); }

  Problem with_gamma(double gamma) const {
    if (!(gamma >= 0.0) || !std::isfinite(gamma))
      throw InvalidProblem("gamma must be finite and nonnegative");
    Problem copy = *this;
    copy.gamma_ = gamma;
    return copy;
  }

 private:
  ObservedPlan plan_;
  std::shared_ptr<const DissimilarityBasis> basis_;
  double gamma_;
  double temperature_;
  std::vector<std::string> names_;
};

// Result of checking the three structural assumptions on a problem.
struct AssumptionReport {
  double max_centering_violation = 0.0;  // max |row or column sum| of centered bases
  double min_gram_eigenvalue = 0.0;
  double max_gram_eigenvalue = 0.0;
  Index zero_entries = 0;                // zero observed entries
  bool centered = true;
  bool independent = true;
  bool positive_support = true;
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
};

inline AssumptionReport check_assumptions(const Problem& problem,
                                          double centering_tol = 1e-10,
                                          double rank_tol = 1e-10) {
  AssumptionReport report;
  const auto& basis = problem.basis();
  for (Index k = 0; k < basis.size(); ++k) {
    auto d = basis.centered_matrix(k);
    report.max_centering_violation =
        std::max({report.max_centering_violation, d.rowwise().sum().cwiseAbs().maxCoeff(),
                  d.colwise().sum().cwiseAbs().maxCoeff()});
  }
  if (report.max_centering_violation > centering_tol) {
    report.centered = false;
    report.violations.push_back("row and column zero sum conditions violated (max |sum| = " +
                                std::to_string(report.max_centering_violation) + ")");
  }

  Matrix gram = basis.centered.transpose() * basis.centered;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  report.min_gram_eigenvalue = eig.eigenvalues().minCoeff();
  report.max_gram_eigenvalue = eig.eigenvalues().maxCoeff();
  if (!(report.max_gram_eigenvalue > 0.0) ||
      report.min_gram_eigenvalue <= rank_tol * report.max_gram_eigenvalue) {
    report.independent = false;
    report.violations.push_back(
        "centered basis matrices are not linearly independent (Gram eigenvalue ratio " +
        std::to_string(report.max_gram_eigenvalue > 0.0
                           ? report.min_gram_eigenvalue / report.max_gram_eigenvalue
                           : 0.0) +
        ")");
  }

  const auto& plan = problem.plan();
  report.zero_entries = (plan.entries.array() <= 0.0).count();
  if (plan.mode == SupportMode::full && report.zero_entries > 0) {
    report.positive_support = false;
    report.violations.push_back("observed plan has " + std::to_string(report.zero_entries) +
                                " zero entries inside a full support");
  }
  return report;
}

// FNV-1a over the plan, support, centered basis and gamma.
inline std::uint64_t problem_checksum(const Problem& problem) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const double* data, Index count) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(data);
    for (std::size_t b = 0; b < static_cast<std::size_t>(count) * sizeof(double); ++b) {
      h ^= bytes[b];
      h *= 1099511628211ULL;
    }
  };
  mix(problem.plan().entries.data(), problem.plan().entries.size());
  mix(problem.plan().support.data(), problem.plan().support.size());
  mix(problem.basis().centered.data(), problem.basis().centered.size());
  const double g = problem.gamma();
  mix(&g, 1);
  return h;
}

}  // namespace sista
