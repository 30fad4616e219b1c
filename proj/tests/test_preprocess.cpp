#include <gtest/gtest.h>

#include <sstream>

#include "oracles.hpp"

using namespace sista;

TEST(ObservedPlan, NormalizesAndComputesMargins) {
  Matrix raw(2, 2);
  raw << 1, 3, 2, 4;
  const auto plan = make_observed_plan(raw);
  EXPECT_DOUBLE_EQ(plan.entries.sum(), 1.0);
  EXPECT_DOUBLE_EQ(plan.p(0), 0.4);
  EXPECT_DOUBLE_EQ(plan.p(1), 0.6);
  EXPECT_DOUBLE_EQ(plan.q(0), 0.3);
  EXPECT_DOUBLE_EQ(plan.q(1), 0.7);
  EXPECT_EQ(plan.support_size(), 4);
}

TEST(ObservedPlan, StructuralSupportDropsZeros) {
  Matrix raw(3, 3);
  raw << 1, 0, 1, 0, 2, 0, 1, 1, 1;
  const auto s = make_observed_plan(raw, SupportMode::structural);
  EXPECT_EQ(s.support_size(), 6);
  EXPECT_FALSE(s.in_support(0, 1));
  const auto f = make_observed_plan(raw, SupportMode::full);
  EXPECT_EQ(f.support_size(), 9);
}

TEST(ObservedPlan, RejectsBadInput) {
  EXPECT_THROW(make_observed_plan(Matrix::Ones(2, 3)), DimensionError);
  Matrix neg = Matrix::Ones(2, 2);
  neg(0, 1) = -1;
  EXPECT_THROW(make_observed_plan(neg), InvalidProblem);
  EXPECT_THROW(make_observed_plan(Matrix::Zero(2, 2)), InvalidProblem);
  Matrix empty_row = Matrix::Ones(3, 3);
  empty_row.row(1).setZero();
  EXPECT_THROW(make_observed_plan(empty_row), InvalidProblem);
  Matrix nan = Matrix::Ones(2, 2);
  nan(1, 1) = std::nan("");
  EXPECT_THROW(make_observed_plan(nan), InvalidProblem);
}

TEST(Centering, MatchesTextbookFormulaAndOffsets) {
  std::mt19937_64 rng(1);
  auto raw = oracle::random_basis(3, 6, rng);
  const auto basis = center_basis(raw);
  ASSERT_EQ(basis.size(), 3);
  ASSERT_EQ(basis.dim(), 6);
  for (Index k = 0; k < 3; ++k) {
    auto d = basis.centered_matrix(k);
    for (Index i = 0; i < 6; ++i)
      for (Index j = 0; j < 6; ++j) {
        EXPECT_NEAR(d(i, j), oracle::centered(raw[k], i, j), 1e-13);
        // raw = centered + row offset + column offset
        EXPECT_NEAR(raw[k](i, j), d(i, j) + basis.row_offsets(i, k) + basis.col_offsets(j, k), 1e-12);
      }
  }
}

TEST(Centering, IdempotentOnCenteredInput) {
  std::mt19937_64 rng(2);
  const auto once = center_basis(oracle::random_basis(2, 5, rng));
  std::vector<Matrix> again_in;
  for (Index k = 0; k < 2; ++k) again_in.push_back(once.centered_matrix(k));
  const auto twice = center_basis(again_in);
  EXPECT_LT((once.centered - twice.centered).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Builders, DiagonalBasis) {
  Matrix x(3, 2), y(3, 2);
  x << 0, 1, 2, 3, 4, 5;
  y << 1, 0, 1, 1, 2, 2;
  const auto d = build_basis_diag(x, y);
  ASSERT_EQ(d.size(), 2u);
  for (Index k = 0; k < 2; ++k)
    for (Index i = 0; i < 3; ++i)
      for (Index j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(d[k](i, j), std::pow(x(i, k) - y(j, k), 2));
}

TEST(Builders, CrossBasisOrdering) {
  Matrix x(2, 2), y(2, 2);
  x << 0, 1, 2, 3;
  y << 5, 7, 11, 13;
  const auto d = build_basis_cross(x, y);
  ASSERT_EQ(d.size(), 4u);
  for (Index r = 0; r < 2; ++r)
    for (Index s = 0; s < 2; ++s)
      for (Index i = 0; i < 2; ++i)
        for (Index j = 0; j < 2; ++j)
          EXPECT_DOUBLE_EQ(d[r * 2 + s](i, j), std::pow(x(i, r) - y(j, s), 2));
  EXPECT_THROW(build_basis_cross(x, Matrix::Ones(3, 2)), DimensionError);
}

TEST(ProblemSetup, TemperatureScalesBasis) {
  std::mt19937_64 rng(3);
  auto raw = oracle::random_basis(2, 4, rng);
  const auto plan = make_observed_plan(oracle::random_plan(4, rng));
  Problem cold(plan, raw, 0.0, 1.0);
  Problem hot(plan, raw, 0.0, 4.0);
  EXPECT_LT((cold.basis().centered / 4.0 - hot.basis().centered).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_THROW(Problem(plan, raw, 0.0, 0.0), InvalidProblem);
  EXPECT_THROW(Problem(plan, raw, -1.0), InvalidProblem);
  EXPECT_EQ(cold.names()[1], "d2");
}

TEST(Assumptions, ReportsDependenceAndZeros) {
  std::mt19937_64 rng(4);
  auto raw = oracle::random_basis(2, 5, rng);
  Matrix plan = oracle::random_plan(5, rng);
  EXPECT_TRUE(check_assumptions(Problem(make_observed_plan(plan), raw)).ok());

  auto dependent = raw;
  dependent.push_back(2.0 * raw[0] - raw[1]);
  const auto r1 = check_assumptions(Problem(make_observed_plan(plan), dependent));
  EXPECT_FALSE(r1.independent);
  EXPECT_TRUE(r1.centered);

  // A matrix of pure row/column offsets centers to zero.
  Matrix offsets(5, 5);
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 5; ++j) offsets(i, j) = i + 2.0 * j;
  const auto r2 = check_assumptions(Problem(make_observed_plan(plan), {raw[0], offsets}));
  EXPECT_FALSE(r2.independent);

  plan(1, 2) = 0.0;
  const auto r3 = check_assumptions(Problem(make_observed_plan(plan, SupportMode::full), raw));
  EXPECT_FALSE(r3.positive_support);
  EXPECT_EQ(r3.zero_entries, 1);
  EXPECT_TRUE(check_assumptions(Problem(make_observed_plan(plan, SupportMode::structural), raw)).ok());
}

TEST(MatrixText, RoundTripIsExact) {
  std::mt19937_64 rng(5);
  Matrix m(3, 4);
  for (Index i = 0; i < 3; ++i)
    for (Index j = 0; j < 4; ++j) m(i, j) = oracle::random_vector(1, rng)(0) * 1e-7;
  std::stringstream ss;
  write_matrix(ss, m);
  EXPECT_EQ(parse_matrix(ss), m);
}

TEST(MatrixText, ParseErrors) {
  std::stringstream ragged("1,2\n3\n");
  EXPECT_THROW(parse_matrix(ragged), ParseError);
  std::stringstream junk("1,abc\n");
  EXPECT_THROW(parse_matrix(junk), ParseError);
  std::stringstream empty("\n\n");
  EXPECT_THROW(parse_matrix(empty), ParseError);
  std::stringstream ok("1, +2.5\n-3,4e-2\n\n");
  const Matrix m = parse_matrix(ok);
  EXPECT_DOUBLE_EQ(m(0, 1), 2.5);
  EXPECT_DOUBLE_EQ(m(1, 1), 0.04);
}
