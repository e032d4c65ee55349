#pragma once

#include "deflab/grid.hpp"
#include "deflab/preference.hpp"

namespace deflab {

// Black-Scholes market with constant λ, σ and discounting dκ = e^{-αt}dt. Dual
// quantities refer to the Lebesgue form: Y = βe^{-βt}yZ, dual ∫V(γY)dκ, γ = e^{αt}.

struct BSParams {
  double alpha;
  double lambda;
  double sigma;
  UtilitySpec U;

  /// Throws DomainError for σ <= 0, α <= 0 or non-finite λ.
  void validate() const;
};

/// θ̂ = λ/(σ(1-p)); λ/σ for log utility.
double merton_fraction(double lambda, double sigma, const UtilitySpec& U);
double merton_fraction(double lambda, double sigma, double p);

/// β̂ = α + qλ²/2 (α for log). Throws InfiniteDualError when β̂ <= 0.
double bs_beta_hat(double alpha, double lambda, const UtilitySpec& U);

/// Dual objective over constant β for power utility:
/// V(y)β^q / (qβ + (1-q)(α + qλ²/2)). Throws DomainError outside β > 0, denominator > 0.
double bs_dual_objective(double beta, double y, double alpha, double lambda, const UtilitySpec& U);

/// Log-utility dual objective over constant β: (V(y) - 1 + λ²/(2α) + β/α - log β)/α.
double log_dual_objective(double beta, double y, double alpha, double lambda);

/// v(y): V(y)β̂^{q-1} for power, log_dual_value for log.
double bs_dual_value(double y, double alpha, double lambda, const UtilitySpec& U);

/// (-log y - 1 + λ²/(2α) - log α)/α.
double log_dual_value(double y, double alpha, double lambda);

/// u(x) = U(x)/β̂ for power, log(x)/α + λ²/(2α²) for log.
double bs_primal_value(double x, double alpha, double lambda, const UtilitySpec& U);

/// u'(x), the dual starting point y matched to x.
double bs_primal_marginal(double x, double alpha, double lambda, const UtilitySpec& U);

/// H_t = β̂^{-(1-q)} E(-qλW)_t evaluated from W_t; H ≡ 1/α for log.
double bs_H(double t, double W_t, double alpha, double lambda, const UtilitySpec& U);

/// X̂_t = x E(-qλW)_t / Z_t = x exp((1-q)λW_t + (1-q²)λ²t/2).
double bs_optimal_wealth(double x, double t, double W_t, double lambda, const UtilitySpec& U);
PathBundle bs_optimal_wealth(double x, const PathBundle& W, double lambda, const UtilitySpec& U);

/// E[Z_u^q | F_t] = E(-qλW)_t exp(-q(1-q)λ²u/2); needs 0 <= t <= u.
double zq_conditional_mean(double q, double lambda, double t, double u, double eq_t);

/// E[X̂_t R̂_t] / y = x e^{-β̂t}.
double bs_expected_deflated_wealth(double t, double x, double alpha, double lambda, const UtilitySpec& U);

/// Expected parts of the primal, dual and budget integrals beyond T at the optimum.
double bs_primal_tail(double T, double x, double alpha, double lambda, const UtilitySpec& U);
double bs_dual_tail(double T, double y, double alpha, double lambda, const UtilitySpec& U);
double bs_budget_tail(double T, double x, double y, double alpha, double lambda, const UtilitySpec& U);

/// Expected dual integral beyond T at a constant β (Lebesgue form); equals
/// bs_dual_tail at β = β̂.
double bs_dual_objective_tail(double beta, double T, double y, double alpha, double lambda, const UtilitySpec& U);

/// E[1/B_t] for the 3-D Bessel process from 1: erf(1/√(2t)) = 2Φ(1/√t) - 1.
double bessel_reciprocal_mean(double t);

}  // namespace deflab
