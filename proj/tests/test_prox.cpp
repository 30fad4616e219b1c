#include <gtest/gtest.h>

#include "sista/prox.hpp"

using namespace sista;

TEST(SoftThreshold, DeadZoneAndShrink) {
  EXPECT_EQ(soft_threshold(0.3, 0.5), 0.0);
  EXPECT_EQ(soft_threshold(-0.5, 0.5), 0.0);
  EXPECT_DOUBLE_EQ(soft_threshold(2.0, 0.5), 1.5);
  EXPECT_DOUBLE_EQ(soft_threshold(-2.0, 0.5), -1.5);
  EXPECT_DOUBLE_EQ(soft_threshold(1.25, 0.0), 1.25);
}

// Prox of τ|·| minimizes ½(x−z)² + τ|x|; check against a grid search.
TEST(ProxL1, MinimizesScalarProblem) {
  for (double z : {-3.0, -0.4, 0.0, 0.2, 1.7}) {
    const double tau = 0.6;
    const double x = prox_l1(Vector::Constant(1, z), tau)(0);
    const double fx = 0.5 * (x - z) * (x - z) + tau * std::abs(x);
    for (double t = -4.0; t <= 4.0; t += 1e-3)
      EXPECT_LE(fx, 0.5 * (t - z) * (t - z) + tau * std::abs(t) + 1e-12);
  }
}

TEST(ProxL1, SignConstraints) {
  Vector z(3);
  z << 2.0, -2.0, 0.1;
  const std::vector<SignConstraint> signs{SignConstraint::nonpos, SignConstraint::nonneg,
                                          SignConstraint::free};
  const Vector x = prox_l1_signed(z, 0.5, signs);
  EXPECT_EQ(x(0), 0.0);
  EXPECT_EQ(x(1), 0.0);
  EXPECT_EQ(x(2), 0.0);
  z << 2.0, -2.0, -3.0;
  const Vector y = prox_l1_signed(z, 0.5, {SignConstraint::nonneg, SignConstraint::nonpos,
                                           SignConstraint::free});
  EXPECT_DOUBLE_EQ(y(0), 1.5);
  EXPECT_DOUBLE_EQ(y(1), -1.5);
  EXPECT_DOUBLE_EQ(y(2), -2.5);
}
