#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "sista/error.hpp"
#include "sista/types.hpp"

namespace sista {

enum class SignConstraint { free, nonneg, nonpos };

// Soft thresholding, the proximal map of τ|·|.
inline double soft_threshold(double z, double tau) {
  if (z > tau) return z - tau;
  if (z < -tau) return z + tau;
  return 0.0;
}

inline Vector prox_l1(const Vector& z, double tau) {
  if (!(tau >= 0.0)) throw InvalidProblem("prox threshold must be nonnegative");
  return z.unaryExpr([tau](double x) { return soft_threshold(x, tau); });
}

// Prox of τ|·|₁ plus the indicator of per-component sign constraints:
// soft threshold, then clip to the allowed half-line.
inline Vector prox_l1_signed(const Vector& z, double tau, const std::vector<SignConstraint>& signs) {
  if (!(tau >= 0.0)) throw InvalidProblem("prox threshold must be nonnegative");
  if (signs.empty()) return prox_l1(z, tau);
  detail::require_dims(static_cast<Index>(signs.size()) == z.size(),
                       "one sign constraint per component");
  Vector out(z.size());
  for (Index k = 0; k < z.size(); ++k) {
    const double s = soft_threshold(z(k), tau);
    switch (signs[k]) {
      case SignConstraint::nonneg: out(k) = std::max(s, 0.0); break;
      case SignConstraint::nonpos: out(k) = std::min(s, 0.0); break;
      default: out(k) = s;
    }
  }
  return out;
}

}  // namespace sista
