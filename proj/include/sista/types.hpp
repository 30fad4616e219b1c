#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace sista {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Cost weights, one per basis matrix.
using CostParams = Eigen::VectorXd;

// How zero entries of an observed plan are treated.
//   structural: zeros are excluded from every sum (the support is the
//               positive-entry set)
//   full:       every cell belongs to the support, zeros are observed data
enum class SupportMode { structural, full };

inline const char* to_string(SupportMode mode) {
  return mode == SupportMode::structural ? "structural" : "full";
}

// An observed transport plan normalized to unit mass.
struct ObservedPlan {
  Matrix entries;   // N x N, nonnegative, sums to 1
  Vector p;         // row margins, all > 0
  Vector q;         // column margins, all > 0
  Matrix support;   // 1.0 on the support, 0.0 elsewhere
  SupportMode mode = SupportMode::structural;

  Index size() const { return entries.rows(); }
  Index support_size() const { return static_cast<Index>(support.sum()); }
  bool in_support(Index i, Index j) const { return support(i, j) != 0.0; }
};

// Dissimilarity matrices dᵏ in raw and doubly-centered form.
//
// Column k of `centered` holds d̃ᵏ flattened column-major, so that the cost
// for a parameter vector is a single matrix-vector product. The raw matrix
// is recovered as dᵏ_ij = d̃ᵏ_ij + row_offsets(i,k) + col_offsets(j,k).
struct DissimilarityBasis {
  std::vector<Matrix> raw;
  Matrix centered;     // N*N x K
  Matrix row_offsets;  // N x K
  Matrix col_offsets;  // N x K

  Index size() const { return centered.cols(); }
  Index dim() const { return row_offsets.rows(); }

  Eigen::Map<const Matrix> centered_matrix(Index k) const {
    return Eigen::Map<const Matrix>(centered.col(k).data(), dim(), dim());
  }
};

// Dual potentials. `normalized` means u(0) == 0 has been imposed.
struct Potentials {
  Vector u;
  Vector v;
  bool normalized = false;

  static Potentials zeros(Index n) { return {Vector::Zero(n), Vector::Zero(n), false}; }
};

}  // namespace sista
