#pragma once

// Estimation workflow: penalty search for a prescribed number of active
// cost components, and bootstrap standard errors at a fixed penalty.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "sista/bench.hpp"
#include "sista/error.hpp"
#include "sista/preprocess.hpp"
#include "sista/problem.hpp"
#include "sista/solvers.hpp"

namespace sista {

// γ and fitted solution with exactly `n_nonzero` active components when
// attainable. n_nonzero = 0 returns γ_max, the smallest γ with β* = 0.
inline GammaSearchResult fit_with_support_size(const Problem& problem, Index n_nonzero,
                                               const GammaSearchConfig& config = {}) {
  if (n_nonzero < 0 || n_nonzero > problem.num_params())
    throw InvalidProblem("requested nonzero count must lie in [0, K]");
  return find_gamma_for_count(problem, n_nonzero, config);
}

struct BootstrapConfig {
  int replicates = 1000;
  std::uint64_t seed = 0;
  // Effective sample size M: pseudo-observations drawn per replicate.
  std::uint64_t sample_size = 1000000;
  // false: every replicate reuses the observed plan unchanged.
  bool resample = true;
  SolverConfig solver;
  unsigned threads = 1;
  double max_drop_fraction = 0.1;
};

struct BootstrapResult {
  Vector se;                          // componentwise sample standard deviation
  CostParams estimate;                // fit on the observed plan
  std::vector<CostParams> replicates;  // successful replicate fits, in draw order
  int dropped = 0;
};

namespace detail {

// Multinomial counts over the support cells (column-major order) by
// sequential conditional binomial draws, normalized to unit mass.
template <class Engine>
Matrix resample_plan(const ObservedPlan& plan, std::uint64_t draws, Engine& rng) {
  Matrix out = Matrix::Zero(plan.size(), plan.size());
  std::uint64_t remaining = draws;
  double mass_left = 1.0;
  for (Index e = 0; e < out.size() && remaining > 0; ++e) {
    if (plan.support.data()[e] == 0.0) continue;
    const double w = plan.entries.data()[e];
    if (w <= 0.0) continue;
    const double prob = std::clamp(w / mass_left, 0.0, 1.0);
    std::binomial_distribution<std::uint64_t> binom(remaining, prob);
    const std::uint64_t c = binom(rng);
    out.data()[e] = static_cast<double>(c);
    remaining -= c;
    mass_left -= w;
    if (mass_left <= 0.0) break;
  }
  // Rounding can leave a few draws unassigned; they go to the last support cell.
  if (remaining > 0) {
    for (Index e = out.size() - 1; e >= 0; --e) {
      if (plan.support.data()[e] != 0.0 && plan.entries.data()[e] > 0.0) {
        out.data()[e] += static_cast<double>(remaining);
        break;
      }
    }
  }
  return out / static_cast<double>(draws);
}

}  // namespace detail

// Nonparametric bootstrap of β at fixed γ: each replicate redraws the plan
// as M multinomial pseudo-observations over the support, refits and keeps
// β. Replicates whose fit fails or does not converge are dropped; more than
// max_drop_fraction dropped is an error.
inline BootstrapResult bootstrap_se(const Problem& problem, double gamma,
                                    const BootstrapConfig& config = {}) {
  if (config.replicates < 2) throw InvalidProblem("bootstrap needs at least two replicates");
  if (config.resample && config.sample_size < 1)
    throw InvalidProblem("bootstrap sample size must be positive");
  const Problem base = problem.with_gamma(gamma);
  const Solution full = sista_solve(base, config.solver);
  const InitialPoint warm{full.potentials, full.beta};

  std::vector<std::optional<CostParams>> fits(config.replicates);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int b = next++; b < config.replicates; b = next++) {
      try {
        std::optional<Problem> replicate;
        if (config.resample) {
          std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                            static_cast<std::uint32_t>(config.seed >> 32),
                            static_cast<std::uint32_t>(b)};
          std::mt19937_64 rng(seq);
          const Matrix drawn = detail::resample_plan(base.plan(), config.sample_size, rng);
          replicate.emplace(
              make_observed_plan_on_support(drawn, base.plan().support, base.plan().mode), base);
        } else {
          replicate.emplace(base);
        }
        auto sol = sista_solve(*replicate, config.solver, warm);
        if (sol.converged && sol.beta.allFinite()) fits[b] = std::move(sol.beta);
      } catch (const Error&) {
        // dropped
      }
    }
  };
  const unsigned threads = std::max(1u, config.threads);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  BootstrapResult result;
  result.estimate = full.beta;
  for (auto& f : fits) {
    if (f) {
      result.replicates.push_back(std::move(*f));
    } else {
      ++result.dropped;
    }
  }
  if (result.dropped > config.max_drop_fraction * config.replicates) {
    throw Error("bootstrap dropped " + std::to_string(result.dropped) + " of " +
                std::to_string(config.replicates) + " replicates");
  }
  if (result.replicates.size() < 2) throw Error("fewer than two successful bootstrap replicates");

  const Index K = problem.num_params();
  const double count = static_cast<double>(result.replicates.size());
  // Deviations from the first replicate: identical replicates give exactly 0.
  const CostParams& shift = result.replicates.front();
  Vector mean = Vector::Zero(K);
  for (const auto& r : result.replicates) mean += r - shift;
  mean /= count;
  Vector ss = Vector::Zero(K);
  for (const auto& r : result.replicates) ss.array() += (r - shift - mean).array().square();
  result.se = (ss / (count - 1.0)).array().sqrt();
  return result;
}

}  // namespace sista
