#include <cmath>
#include <vector>

#include "doctest.h"
#include "deflab/closed_form.hpp"
#include "deflab/deflator.hpp"
#include "deflab/errors.hpp"
#include "deflab/market.hpp"
#include "deflab/verify.hpp"

using namespace deflab;

namespace {

MCEstimate est(double mean, double se, std::size_t n = 1000) {
  MCEstimate e;
  e.mean = mean;
  e.std_error = se;
  e.n = n;
  return e;
}

struct LogOptimum {
  TimeGrid g = TimeGrid(20.0, 400);
  PathRange r{0, 500};
  DiscountMeasure kappa = DiscountMeasure::exponential(0.1);
  std::optional<DeflatedTriple> T;
  std::optional<PathBundle> X;

  LogOptimum() {
    const auto model = MarketModel::black_scholes(0.4, 0.2);
    const auto W = simulate_driver(g, r, 31, NoiseStream::W);
    const auto lam = mpr_for(model, W, std::nullopt);
    const auto Z = build_Z(PsiSpec::zero(), model, W, nullptr, lam);
    DeflatorSpec spec;
    spec.y = 1.0;
    T = build_triple(build_S(spec, &Z, g, r), BetaControl::constant(0.1), kappa, Convention::LebesgueForm);
    X = bs_optimal_wealth(10.0, W, 0.4, UtilitySpec::log());
  }
};

}  // namespace

TEST_CASE("budget verdict examples") {
  CHECK(budget_verdict(est(0.999, 0.002), 1.0, 1.0, BudgetMode::Saturation).pass());
  CHECK_FALSE(budget_verdict(est(1.2, 0.01), 1.0, 1.0, BudgetMode::Inequality).pass());
  CHECK(budget_verdict(est(0.5, 0.01), 1.0, 1.0, BudgetMode::Inequality).pass());
  CHECK_FALSE(budget_verdict(est(0.5, 0.01), 1.0, 1.0, BudgetMode::Saturation).pass());
  CHECK(budget_verdict(est(0.5, 0.01), 1.0, 1.0, BudgetMode::Saturation, 0.5).pass());
}

TEST_CASE("log optimum: budget saturates exactly and M is constant") {
  LogOptimum o;
  const auto b = estimate_budget(*o.X, *o.T, o.kappa, Convention::LebesgueForm);
  CHECK(b.mean == doctest::Approx(10.0 * -std::expm1(-2.0)).epsilon(1e-10));
  CHECK(b.std_error < 1e-10);
  const auto v = budget_verdict(b, 10.0, 1.0, BudgetMode::Saturation, 10.0 * std::exp(-2.0));
  CHECK(v.pass());
  const auto M = assemble_M(*o.X, *o.T);
  const std::vector<double> cps = {0.0, 5.0, 10.0, 20.0};
  CHECK(martingale_mean_test(M, cps).pass());
  CHECK(supermartingale_mean_test(M, cps).pass());
  CHECK_THROWS_AS(estimate_budget(*o.X, *o.T, o.kappa, Convention::KappaForm), StructuralError);
}

TEST_CASE("log optimum: potential, representation and first-order condition") {
  LogOptimum o;
  const auto XR = multiply(*o.X, o.T->R);
  const std::vector<double> cps = {0.0, 5.0, 10.0};
  const DecayOracle oracle = [](double t) { return 10.0 * std::exp(-0.1 * t); };
  CHECK(potential_test(XR, cps, oracle).pass());
  CHECK(owp_representation_check(*o.X, *o.T, cps, OwpMode::Pathwise, 10.0 * std::exp(-2.0), 0.0, oracle).pass());
  CHECK(foc_check(UtilitySpec::log(), *o.X, o.T->Y, o.kappa, Convention::LebesgueForm).pass());
  // a wrong y breaks the first-order condition
  auto Y2 = o.T->Y;
  for (std::size_t p = 0; p < Y2.n_paths(); ++p)
    for (std::size_t i = 0; i < Y2.nodes(); ++i) Y2(p, i) *= 1.01;
  CHECK_FALSE(foc_check(UtilitySpec::log(), *o.X, Y2, o.kappa, Convention::LebesgueForm).pass());
}

TEST_CASE("a pair that never decays is not a potential") {
  const TimeGrid g(10.0, 100);
  const PathRange r{0, 50};
  const auto XR = PathBundle::filled(g, r, 2.0);
  const std::vector<double> cps = {0.0, 5.0, 10.0};
  CHECK_FALSE(potential_test(XR, cps).pass());
}

TEST_CASE("martingale test detects drift") {
  const TimeGrid g(1.0, 100);
  const PathRange r{0, 5000};
  const auto W = simulate_driver(g, r, 8, NoiseStream::W);
  PathBundle drift(g, r);
  for (std::size_t p = 0; p < r.count; ++p)
    for (std::size_t i = 0; i < g.nodes(); ++i) drift(p, i) = W(p, i) + 0.2 * g.time(i);
  const std::vector<double> cps = {0.0, 0.5, 1.0};
  CHECK(martingale_mean_test(W, cps).pass());
  CHECK_FALSE(martingale_mean_test(drift, cps).pass());
  CHECK_FALSE(supermartingale_mean_test(drift, cps).pass());
}

TEST_CASE("primal and dual samples propagate infinities") {
  const TimeGrid g(1.0, 4);
  const PathRange r{0, 3};
  auto X = PathBundle::filled(g, r, 1.0);
  X(1, 2) = 0.0;
  const auto dk = kappa_increments(DiscountMeasure::exponential(1.0), g);
  const auto s = primal_samples(UtilitySpec::log(), X, dk);
  CHECK(s[1] == -INFINITY);
  const auto e = estimate_primal(UtilitySpec::log(), X, DiscountMeasure::exponential(1.0));
  CHECK(e.infinite);
  auto Y = PathBundle::filled(g, r, 1.0);
  Y(0, 1) = 0.0;
  const auto d = dual_samples(UtilitySpec::log(), Y, DiscountMeasure::exponential(1.0), Convention::KappaForm);
  CHECK(d[0] == INFINITY);
}

TEST_CASE("weak duality gap") {
  CHECK(weak_duality_gap(est(1.0, 0.01), est(0.5, 0.01), 1.0, 1.0).pass());
  CHECK_FALSE(weak_duality_gap(est(3.0, 0.01), est(0.5, 0.01), 1.0, 1.0).pass());
}
