#pragma once

// Reference implementations written with plain loops and no shared code
// paths with the library, plus small instance generators.

#include <cmath>
#include <random>
#include <vector>

#include "sista/sista.hpp"

namespace oracle {

using sista::Index;
using sista::Matrix;
using sista::Vector;

inline std::vector<Matrix> random_basis(Index k, Index n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal;
  std::vector<Matrix> out;
  for (Index b = 0; b < k; ++b) {
    Matrix d(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) d(i, j) = scale * normal(rng);
    out.push_back(d);
  }
  return out;
}

inline Matrix random_plan(Index n, std::mt19937_64& rng, double zero_fraction = 0.0) {
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  std::bernoulli_distribution drop(zero_fraction);
  Matrix m(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) m(i, j) = unif(rng);
  if (zero_fraction > 0.0) {
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j)
        if (i != j && drop(rng)) m(i, j) = 0.0;  // diagonal kept: no empty rows
  }
  return m;
}

inline Vector random_vector(Index n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> normal;
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = scale * normal(rng);
  return v;
}

// Centered basis entry by the textbook formula
// d̃_ij = d_ij − mean_j' d_ij' − mean_i' d_i'j + mean d.
inline double centered(const Matrix& d, Index i, Index j) {
  const Index n = d.rows();
  double row = 0, col = 0, all = 0;
  for (Index t = 0; t < n; ++t) {
    row += d(i, t);
    col += d(t, j);
  }
  for (Index a = 0; a < n; ++a)
    for (Index b = 0; b < n; ++b) all += d(a, b);
  return d(i, j) - row / n - col / n + all / (n * n);
}

inline Matrix centered_cost(const std::vector<Matrix>& basis, const Vector& beta) {
  const Index n = basis.front().rows();
  Matrix c = Matrix::Zero(n, n);
  for (std::size_t k = 0; k < basis.size(); ++k)
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) c(i, j) += beta(k) * centered(basis[k], i, j);
  return c;
}

// F(u, v, β) = Σ_{π̂>0 or full} exp(u_i + v_j − c_ij) − Σ π̂_ij (u_i + v_j − c_ij).
inline double dual(const Matrix& pihat, const Matrix& support, const std::vector<Matrix>& basis,
                   const Vector& u, const Vector& v, const Vector& beta) {
  const Matrix c = centered_cost(basis, beta);
  double f = 0.0;
  for (Index i = 0; i < pihat.rows(); ++i)
    for (Index j = 0; j < pihat.cols(); ++j) {
      if (support(i, j) == 0.0) continue;
      const double lam = u(i) + v(j) - c(i, j);
      f += std::exp(lam) - pihat(i, j) * lam;
    }
  return f;
}

inline Matrix plan(const Matrix& support, const std::vector<Matrix>& basis, const Vector& u,
                   const Vector& v, const Vector& beta) {
  const Matrix c = centered_cost(basis, beta);
  Matrix pi = Matrix::Zero(support.rows(), support.cols());
  for (Index i = 0; i < pi.rows(); ++i)
    for (Index j = 0; j < pi.cols(); ++j)
      if (support(i, j) != 0.0) pi(i, j) = std::exp(u(i) + v(j) - c(i, j));
  return pi;
}

}  // namespace oracle
