// Recover a sparse cost from a plan generated by a known cost, then refit
// with an L1 penalty chosen to keep three components.

#include <iostream>
#include <random>

#include "sista/sista.hpp"

int main() {
  using namespace sista;
  const Index n = 30, k = 8;
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;

  std::vector<Matrix> basis;
  for (Index b = 0; b < k; ++b) {
    Matrix d(n, n);
    for (Index j = 0; j < n; ++j)
      for (Index i = 0; i < n; ++i) d(i, j) = normal(rng);
    basis.push_back(d);
  }
  CostParams truth = CostParams::Zero(k);
  truth(1) = 0.8;
  truth(4) = -0.5;
  truth(6) = 0.3;

  // Plan exp(u + v - c) with random potentials, then normalized.
  Matrix c = Matrix::Zero(n, n);
  for (Index b = 0; b < k; ++b) c += truth(b) * basis[b];
  Matrix plan(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) plan(i, j) = std::exp(0.3 * i / n - 0.2 * j / n - c(i, j));

  Problem problem(make_observed_plan(plan), basis);
  const Solution fit = sista_solve(problem, SolverConfig{});
  std::cout << "gamma = 0: " << fit.iterations << " iterations, kkt " << fit.kkt_residual << '\n';
  for (Index b = 0; b < k; ++b)
    std::cout << "  beta[" << b << "] = " << fit.beta(b) << "  (true " << truth(b) << ")\n";

  const auto sparse = fit_with_support_size(problem, 3);
  std::cout << "gamma = " << sparse.gamma << " keeps " << sparse.nnz << " components\n";
  for (Index b = 0; b < k; ++b)
    if (sparse.solution.beta(b) != 0.0) std::cout << "  beta[" << b << "] = " << sparse.solution.beta(b) << '\n';
  return 0;
}
