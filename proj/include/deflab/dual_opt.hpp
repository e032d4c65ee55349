#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "deflab/deflator.hpp"
#include "deflab/grid.hpp"
#include "deflab/market.hpp"
#include "deflab/preference.hpp"
#include "deflab/stats.hpp"

namespace deflab {

struct ScalarMinProblem {
  std::function<double(double)> objective;
  double lo = 1e-4;
  double hi = 1.0;
  double tol = 1e-8;  // absolute, on β
};

struct ScalarMinResult {
  double beta = 0.0;
  double value = 0.0;
  std::size_t evaluations = 0;
  int retries = 0;  // bracket shrinks after domain errors
};

/// Golden-section search in log β over a bracket assumed to contain one minimum.
/// A DomainError at β_bad shrinks the bracket so it excludes β_bad and restarts,
/// at most three times; the fourth error is rethrown.
ScalarMinResult minimize_constant_beta(const ScalarMinProblem& prob);

/// Monte-Carlo dual problem over constant β with S = yZ, dκ = e^{-αt}dt, Lebesgue form.
struct McDualSetup {
  MarketModel model = MarketModel::black_scholes(0.4, 0.2);
  UtilitySpec U = UtilitySpec::log();
  double alpha = 0.1;
  TimeGrid grid = TimeGrid(100.0, 2000);
  double y = 1.0;
  std::size_t n_paths = 10000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

/// Estimate of E Σ V(γ_iY_i)Δκ_i at constant β; the drivers depend only on the seed.
MCEstimate mc_dual_objective(double beta, const McDualSetup& setup, const PsiSpec& psi = PsiSpec::zero());

struct BetaProfile {
  std::vector<double> betas;
  std::vector<MCEstimate> values;  // common random numbers across betas
  double beta_star = 0.0;          // minimizer of the sample objective on the full grid
  double value_star = 0.0;
  double beta_star_coarse = 0.0;   // same paths, every second node
  double beta_star_extrapolated = 0.0;  // 2·fine - coarse, removes the O(Δt) quadrature bias
  double curvature = 0.0;          // f''(β*) of the sample objective
  double slope_se = 0.0;           // SE of the per-path slope f'(probe)
  double uncertainty = 0.0;        // slope_se / curvature
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
};

/// Evaluates the sample objective at `betas` and minimizes it over [lo, hi].
/// The per-path slope is taken at `probe`.
BetaProfile mc_beta_profile(const McDualSetup& setup, std::span<const double> betas, double probe, double lo,
                            double hi);

/// True iff `values` decrease then increase, ignoring wiggles up to k·SE.
bool unimodal_within(std::span<const MCEstimate> values, double k = 1.0);

struct PsiCheckResult {
  Verdict verdict;
  std::vector<double> psis;
  std::vector<MCEstimate> objective;
  std::vector<MCEstimate> diff_vs_zero;
};

/// Dual objective at fixed β for constant ψ values, shared drivers. Pass iff
/// objective(ψ) - objective(0) >= -3 SE (paired) for every ψ != 0.
PsiCheckResult psi_zero_optimality_check(const McDualSetup& setup, double beta, std::span<const double> psis);

}  // namespace deflab
