#pragma once

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "deflab/deflator.hpp"
#include "deflab/discount.hpp"
#include "deflab/grid.hpp"
#include "deflab/preference.hpp"
#include "deflab/stats.hpp"

namespace deflab {

/// Relative slack granted to comparisons whose two sides are equal in exact
/// arithmetic, so that a zero-variance estimate is not failed by rounding.
inline constexpr double kExactFloor = 1e-10;

// ---- per-path samples (building blocks for the block pipeline) ----

/// Σ_i X_iρ_i per path: the budget integral ∫XY dκ (or dt) over [0, T_max].
std::vector<double> budget_samples(const PathBundle& X, const DeflatedTriple& T);

/// Σ_{i<N} U(X_i)Δκ_i per path; X = 0 on a charged cell gives U(0) (possibly -inf).
std::vector<double> primal_samples(const UtilitySpec& U, const PathBundle& X, std::span<const double> dkappa);

/// Σ_{i<N} V(Y_i)Δκ_i (KappaForm) or Σ V(γ_iY_i)Δκ_i (LebesgueForm) per path.
/// Y = 0 on a charged cell gives V(0) = +inf for log and q < 0.
std::vector<double> dual_samples(const UtilitySpec& U, const PathBundle& Y, const DiscountMeasure& kappa,
                                 Convention conv);

/// Per path max over nodes of |U'(X_t) - γ_tY_t| / (γ_tY_t), γ ≡ 1 in KappaForm.
std::vector<double> foc_errors(const UtilitySpec& U, const PathBundle& X, const PathBundle& Y,
                               const DiscountMeasure& kappa, Convention conv);

// ---- estimators ----

/// Throws StructuralError when the triple was built under another convention.
MCEstimate estimate_budget(const PathBundle& X, const DeflatedTriple& T, const DiscountMeasure& kappa,
                           Convention expected);
MCEstimate estimate_primal(const UtilitySpec& U, const PathBundle& X, const DiscountMeasure& kappa);
MCEstimate estimate_dual(const UtilitySpec& U, const PathBundle& Y, const DiscountMeasure& kappa, Convention conv);

// ---- verdicts ----

enum class BudgetMode { Inequality, Saturation };

/// Inequality: mean - xy <= 3SE + allowance. Saturation: |mean + tail_bound - xy| <= 3SE + allowance.
/// The statistic is mean - xy, respectively |mean + tail_bound - xy|.
Verdict budget_verdict(const MCEstimate& est, double x, double y, BudgetMode mode, double tail_bound = 0.0,
                       double tail_allowance = 0.0);

/// Pass iff v + xy - u >= -3·sqrt(SE_u² + SE_v²).
Verdict weak_duality_gap(const MCEstimate& u_est, const MCEstimate& v_est, double x, double y);

/// E[M_t] = M_{t_0} within 3 SE at every later checkpoint, and increments
/// M_{t_{k+1}} - M_{t_k} uncorrelated with M_{t_k} (robust t-statistic within 3).
/// Statistic: the worst deviation in units of its band (pass iff <= 1).
Verdict martingale_mean_test(const CheckpointPanel& M);
Verdict martingale_mean_test(const PathBundle& M, std::span<const double> checkpoints);

/// E[M_{t_{k+1}}] <= E[M_{t_k}] + 3 SE of the paired difference for consecutive checkpoints.
Verdict supermartingale_mean_test(const CheckpointPanel& M);
Verdict supermartingale_mean_test(const PathBundle& M, std::span<const double> checkpoints);

using DecayOracle = std::function<double(double)>;

/// Non-increasing within bands, final mean <= max(3SE, oracle(t_final) + 3SE), and
/// with an oracle, |mean - oracle(t)| <= 3SE at each checkpoint.
Verdict potential_test(const CheckpointPanel& XR, const std::optional<DecayOracle>& oracle = std::nullopt);
Verdict potential_test(const PathBundle& XR, std::span<const double> checkpoints,
                       const std::optional<DecayOracle>& oracle = std::nullopt);

/// Both sides of X_tR_t = E[∫_t^∞ XY dκ | F_t] at checkpoints: lhs = X_tR_t and
/// rhs = Σ_{i >= node(t)} X_iρ_i (the part of the integral inside [t, T_max]).
struct OwpPanels {
  CheckpointPanel lhs;
  CheckpointPanel rhs;
};
OwpPanels owp_panels(const PathBundle& X, const DeflatedTriple& T, std::span<const double> checkpoints);

enum class OwpMode { Aggregate, Pathwise };

/// Aggregate: |E[lhs - rhs] - tail_bound| <= 3SE + allowance at each checkpoint, where
/// tail_bound is the expected integral beyond T_max.
/// Pathwise: every path satisfies |lhs - oracle(t)| and |rhs + tail_bound - oracle(t)|
/// below 1e-8·oracle(t).
Verdict owp_representation_check(const OwpPanels& panels, OwpMode mode, double tail_bound,
                                 double tail_allowance = 0.0, const std::optional<DecayOracle>& oracle = std::nullopt);
Verdict owp_representation_check(const PathBundle& X, const DeflatedTriple& T, std::span<const double> checkpoints,
                                 OwpMode mode, double tail_bound, double tail_allowance = 0.0,
                                 const std::optional<DecayOracle>& oracle = std::nullopt);

inline constexpr double kFocTolerance = 1e-8;

/// Pass iff the worst relative FOC residual is below kFocTolerance.
Verdict foc_check(std::span<const double> per_path_errors);
Verdict foc_check(const UtilitySpec& U, const PathBundle& X, const PathBundle& Y, const DiscountMeasure& kappa,
                  Convention conv);

}  // namespace deflab
