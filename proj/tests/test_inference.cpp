#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace sista;

namespace {
BootstrapConfig small_config(int replicates, std::uint64_t seed) {
  BootstrapConfig c;
  c.replicates = replicates;
  c.seed = seed;
  c.sample_size = 20000;
  return c;
}
}  // namespace

TEST(Resample, CountsSumAndStayOnSupport) {
  std::mt19937_64 rng(1);
  Matrix raw = oracle::random_plan(6, rng, 0.3);
  const auto plan = make_observed_plan(raw);
  std::mt19937_64 draw(2);
  const Matrix r = detail::resample_plan(plan, 100000, draw);
  EXPECT_NEAR(r.sum(), 1.0, 1e-12);
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 6; ++j) {
      if (plan.support(i, j) == 0.0) EXPECT_EQ(r(i, j), 0.0);
      // Each count is integral.
      const double count = r(i, j) * 100000;
      EXPECT_NEAR(count, std::round(count), 1e-6);
    }
  // Frequencies concentrate around the plan (binomial sd < 0.0016 at M = 1e5).
  EXPECT_LT((r - plan.entries).cwiseAbs().maxCoeff(), 0.01);
}

TEST(Bootstrap, DeterministicUnderSeed) {
  const auto p = gen_synthetic(4, 8, 3);
  const double g = gamma_max(p) * 0.2;
  const auto a = bootstrap_se(p, g, small_config(12, 5));
  const auto b = bootstrap_se(p, g, small_config(12, 5));
  ASSERT_EQ(a.se.size(), 4);
  EXPECT_EQ(a.se, b.se);
  EXPECT_TRUE((a.se.array() >= 0).all());
  const auto c = bootstrap_se(p, g, small_config(12, 6));
  EXPECT_NE(a.se, c.se);
}

TEST(Bootstrap, ThreadCountDoesNotChangeResult) {
  const auto p = gen_synthetic(3, 6, 4);
  auto cfg = small_config(8, 7);
  const auto one = bootstrap_se(p, 0.0, cfg);
  cfg.threads = 3;
  const auto three = bootstrap_se(p, 0.0, cfg);
  EXPECT_EQ(one.se, three.se);
}

TEST(Bootstrap, NoResampleGivesZeroSe) {
  const auto p = gen_synthetic(4, 8, 5);
  auto cfg = small_config(5, 1);
  cfg.resample = false;
  const auto r = bootstrap_se(p, gamma_max(p) * 0.3, cfg);
  EXPECT_EQ(r.se, Vector::Zero(4));
  EXPECT_EQ(r.dropped, 0);
}

TEST(Bootstrap, SeMatchesSampleStdOfReplicates) {
  const auto p = gen_synthetic(3, 6, 6);
  const auto r = bootstrap_se(p, 0.0, small_config(10, 2));
  ASSERT_EQ(r.replicates.size(), 10u);
  for (Index k = 0; k < 3; ++k) {
    double mean = 0, ss = 0;
    for (const auto& b : r.replicates) mean += b(k);
    mean /= 10;
    for (const auto& b : r.replicates) ss += (b(k) - mean) * (b(k) - mean);
    EXPECT_NEAR(r.se(k), std::sqrt(ss / 9), 1e-12);
  }
}

TEST(Bootstrap, RejectsBadConfig) {
  const auto p = gen_synthetic(2, 4, 7);
  auto cfg = small_config(1, 0);
  EXPECT_THROW(bootstrap_se(p, 0.0, cfg), InvalidProblem);
}

TEST(SupportSize, ZeroMeansGammaMax) {
  const auto p = gen_synthetic(5, 8, 8);
  const auto r = fit_with_support_size(p, 0);
  EXPECT_EQ(r.nnz, 0);
  EXPECT_THROW(fit_with_support_size(p, 6), InvalidProblem);
  const auto two = fit_with_support_size(p, 2);
  EXPECT_EQ(two.nnz, 2);
}
