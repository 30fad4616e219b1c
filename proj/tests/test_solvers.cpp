#include <gtest/gtest.h>

#include "oracles.hpp"

using namespace sista;

namespace {

Problem random_problem(Index k, Index n, std::uint64_t seed, double gamma, double zero_fraction = 0.0) {
  std::mt19937_64 rng(seed);
  auto basis = oracle::random_basis(k, n, rng);
  return Problem(make_observed_plan(oracle::random_plan(n, rng, zero_fraction)), basis, gamma);
}

// Optimality residual computed from scratch with loop oracles.
double kkt_oracle(const Problem& p, const std::vector<Matrix>& raw, const Solution& s) {
  const Matrix& pihat = p.plan().entries;
  const Matrix pi = oracle::plan(p.plan().support, raw, s.potentials.u, s.potentials.v, s.beta);
  const Matrix r = pi - pihat;
  double res = 0.0;
  for (Index i = 1; i < r.rows(); ++i) res = std::max(res, std::abs(r.row(i).sum()));
  for (Index j = 0; j < r.cols(); ++j) res = std::max(res, std::abs(r.col(j).sum()));
  for (std::size_t k = 0; k < raw.size(); ++k) {
    double g = 0.0;  // ∂F/∂β_k = Σ (π̂ − π) d̃
    for (Index i = 0; i < r.rows(); ++i)
      for (Index j = 0; j < r.cols(); ++j) g -= r(i, j) * oracle::centered(raw[k], i, j);
    const double b = s.beta(k);
    const double viol = b == 0.0 ? std::max(0.0, std::abs(g) - p.gamma())
                                 : std::abs(g + p.gamma() * (b > 0 ? 1.0 : -1.0));
    res = std::max(res, viol);
  }
  return res;
}

}  // namespace

TEST(KktResidual, MatchesOracleForAllSolvers) {
  std::mt19937_64 rng(1);
  auto raw = oracle::random_basis(4, 8, rng);
  Problem p(make_observed_plan(oracle::random_plan(8, rng, 0.2)), raw, 0.02);
  for (auto kind : {SolverKind::sista, SolverKind::ista, SolverKind::cd}) {
    const auto s = solve(kind, p, SolverConfig{});
    ASSERT_TRUE(s.converged) << to_string(kind) << ' ' << s.stop_reason;
    EXPECT_LE(s.kkt_residual, 1e-8);
    EXPECT_NEAR(kkt_oracle(p, raw, s), s.kkt_residual, 1e-10);
    EXPECT_NEAR(kkt_residual(s.potentials.u, s.potentials.v, s.beta, p), s.kkt_residual, 1e-14);
  }
}

TEST(KktResidual, ZeroComponentInsideInterval) {
  auto p = random_problem(3, 6, 2, 0.0);
  const auto sk = sinkhorn_solve(Vector::Zero(3), p, 1e-13, 10000);
  const Vector g = grad_beta(sk.potentials.u, sk.potentials.v, Vector::Zero(3), p);
  // γ above every |g_k| makes β = 0 optimal.
  const auto big = p.with_gamma(g.cwiseAbs().maxCoeff() * 1.01);
  EXPECT_LT(kkt_residual(sk.potentials.u, sk.potentials.v, Vector::Zero(3), big), 1e-12);
  const auto small = p.with_gamma(g.cwiseAbs().maxCoeff() * 0.5);
  EXPECT_NEAR(kkt_residual(sk.potentials.u, sk.potentials.v, Vector::Zero(3), small),
              g.cwiseAbs().maxCoeff() * 0.5, 1e-12);
}

TEST(SistaStep, OptimumIsFixedPoint) {
  auto p = random_problem(5, 10, 3, 0.01);
  SolverConfig cfg;
  cfg.tol_kkt = 1e-12;
  const auto s = sista_solve(p, cfg);
  ASSERT_TRUE(s.converged);
  SistaState st{s.potentials.u, s.potentials.v, s.beta, 1.0, 0.0};
  const auto next = sista_step(st, p, cfg);
  EXPECT_LT((next.beta - s.beta).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((next.u - s.potentials.u).cwiseAbs().maxCoeff(), 1e-9);
  for (Index k = 0; k < 5; ++k) EXPECT_EQ(next.beta(k) == 0.0, s.beta(k) == 0.0);
}

TEST(SistaStep, FixedStepMatchesHandComputation) {
  auto p = random_problem(3, 6, 4, 0.05);
  SolverConfig cfg;
  cfg.step_policy = StepPolicy::fixed;
  cfg.rho = 0.3;
  const Vector beta0 = Vector::Constant(3, 0.2);
  SistaState st{Vector::Zero(6), Vector::Zero(6), beta0, 0.3, 0.0};
  const auto next = sista_step(st, p, cfg);
  Vector u = sinkhorn_u_update(Vector::Zero(6), beta0, p);
  Vector v = sinkhorn_v_update(u, beta0, p);
  normalize(u, v);
  const Vector g = grad_beta(u, v, beta0, p);
  const Vector expect = prox_l1(beta0 - 0.3 * g, 0.3 * 0.05);
  EXPECT_LT((next.beta - expect).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_DOUBLE_EQ(next.last_rho, 0.3);
}

TEST(Sista, MonotoneDescent) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto p = random_problem(10, 20, 100 + seed, 0.01, 0.1);
    const auto s = sista_solve(p, SolverConfig{});
    const auto& rec = s.trace.records;
    ASSERT_GE(rec.size(), 2u);
    for (std::size_t t = 1; t < rec.size(); ++t) EXPECT_LE(rec[t].phi, rec[t - 1].phi + 1e-12);
  }
}

TEST(Solvers, AgreeOnUniqueOptimum) {
  auto p = random_problem(5, 10, 5, 0.02);
  const auto a = sista_solve(p, SolverConfig{});
  const auto b = ista_solve(p, SolverConfig{});
  const auto c = cd_solve(p, SolverConfig{});
  ASSERT_TRUE(a.converged && b.converged && c.converged);
  EXPECT_LT((a.beta - b.beta).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_LT((a.beta - c.beta).cwiseAbs().maxCoeff(), 1e-6);
  EXPECT_NEAR(a.phi, b.phi, 1e-10);
  EXPECT_NEAR(a.phi, c.phi, 1e-10);
}

TEST(Solvers, RecoverGeneratingParameters) {
  std::mt19937_64 rng(6);
  const Index n = 15, k = 6;
  auto raw = oracle::random_basis(k, n, rng);
  Vector truth = Vector::Zero(k);
  truth(0) = 0.7;
  truth(3) = -0.4;
  const Vector u0 = oracle::random_vector(n, rng, 0.3), v0 = oracle::random_vector(n, rng, 0.3);
  const Matrix pi = oracle::plan(Matrix::Ones(n, n), raw, u0, v0, truth);
  Problem p(make_observed_plan(pi), raw, 0.0);
  for (auto kind : {SolverKind::sista, SolverKind::ista, SolverKind::cd}) {
    const auto s = solve(kind, p, SolverConfig{});
    EXPECT_TRUE(s.converged) << to_string(kind);
    EXPECT_LT((s.beta - truth).cwiseAbs().maxCoeff(), 1e-6) << to_string(kind);
  }
}

TEST(Solvers, LargeGammaGivesZero) {
  auto p = random_problem(4, 8, 7, 0.0);
  const auto big = p.with_gamma(gamma_max(p) * 1.5);
  for (auto kind : {SolverKind::sista, SolverKind::ista, SolverKind::cd}) {
    const auto s = solve(kind, big, SolverConfig{});
    EXPECT_EQ(s.nnz(), 0) << to_string(kind);
    EXPECT_TRUE(s.converged);
  }
}

TEST(Solvers, SignConstraintsRespected) {
  auto p = random_problem(4, 8, 8, 0.0);
  const auto free = sista_solve(p, SolverConfig{});
  SolverConfig cfg;
  cfg.signs.assign(4, SignConstraint::free);
  Index flipped = 0;
  for (Index k = 0; k < 4; ++k) {
    if (free.beta(k) > 0) {
      cfg.signs[k] = SignConstraint::nonpos;
      flipped = k;
      break;
    }
  }
  const auto a = sista_solve(p, cfg);
  const auto c = cd_solve(p, cfg);
  ASSERT_TRUE(a.converged && c.converged);
  EXPECT_LE(a.beta(flipped), 0.0);
  EXPECT_LE(c.beta(flipped), 0.0);
  EXPECT_LT((a.beta - c.beta).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Cd, InnerBisectionResidualSmall) {
  auto p = random_problem(6, 12, 9, 0.01);
  const auto s = cd_solve(p, SolverConfig{});
  ASSERT_TRUE(s.converged);
  EXPECT_LE(s.max_inner_residual, 1e-10);
}

TEST(Stopping, IterationLimitAndTrace) {
  auto p = random_problem(5, 10, 10, 0.01);
  SolverConfig cfg;
  cfg.max_iter = 3;
  cfg.step_policy = StepPolicy::fixed;
  cfg.rho = 1e-3;
  const auto s = ista_solve(p, cfg);
  EXPECT_FALSE(s.converged);
  EXPECT_EQ(s.iterations, 3);
  EXPECT_EQ(s.stop_reason, "max_iter");
  ASSERT_EQ(s.trace.records.size(), 4u);
  for (std::size_t t = 1; t < s.trace.records.size(); ++t)
    EXPECT_GE(s.trace.records[t].elapsed_seconds, s.trace.records[t - 1].elapsed_seconds);
}

TEST(Stopping, ReferenceGap) {
  auto p = random_problem(5, 10, 11, 0.01);
  SolverConfig ref;
  ref.tol_kkt = 1e-12;
  const auto star = sista_solve(p, ref);
  SolverConfig cfg;
  cfg.reference_phi = star.phi;
  cfg.gap_tol = 1e-6;
  cfg.tol_kkt = 1e-14;
  const auto s = ista_solve(p, cfg);
  EXPECT_EQ(s.stop_reason, "gap");
  EXPECT_LE(s.trace.records.back().gap, 1e-6);
}

TEST(Config, InvalidSettingsRejected) {
  auto p = random_problem(2, 4, 12, 0.0);
  SolverConfig cfg;
  cfg.shrink = 1.0;
  EXPECT_THROW(sista_solve(p, cfg), InvalidProblem);
  cfg = SolverConfig{};
  cfg.rho = -1;
  EXPECT_THROW(cd_solve(p, cfg), InvalidProblem);
}

TEST(WarmStart, ConvergesFasterFromOptimum) {
  auto p = random_problem(5, 10, 13, 0.01);
  const auto s = sista_solve(p, SolverConfig{});
  const auto w = sista_solve(p, SolverConfig{}, InitialPoint{s.potentials, s.beta});
  EXPECT_LE(w.iterations, 1);
  EXPECT_TRUE(w.converged);
}
