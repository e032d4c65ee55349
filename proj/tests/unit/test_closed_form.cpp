#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "deflab/closed_form.hpp"
#include "deflab/errors.hpp"
#include "deflab/market.hpp"

using namespace deflab;

namespace {

const auto kPow = UtilitySpec::power(0.5);

// inf_y [v(y) + xy] on a fine log grid refined by golden section.
double conjugacy_primal(double x, double alpha, double lambda, const UtilitySpec& U) {
  auto f = [&](double ly) {
    const double y = std::exp(ly);
    return bs_dual_value(y, alpha, lambda, U) + x * y;
  };
  double a = -20.0, b = 20.0;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int k = 0; k < 300; ++k) {
    const double c = b - g * (b - a), d = a + g * (b - a);
    if (f(c) < f(d))
      b = d;
    else
      a = c;
  }
  return f(0.5 * (a + b));
}

template <class F>
double simpson(F f, double lo, double hi, int n = 20000) {
  const double h = (hi - lo) / n;
  double s = f(lo) + f(hi);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(lo + i * h);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("Black-Scholes power case at alpha=0.1, lambda=0.4, sigma=0.2, p=0.5") {
  CHECK(bs_beta_hat(0.1, 0.4, kPow) == doctest::Approx(0.02).epsilon(1e-14));
  CHECK(merton_fraction(0.4, 0.2, kPow) == doctest::Approx(4.0));
  CHECK(bs_dual_value(1.0, 0.1, 0.4, kPow) == doctest::Approx(2500.0).epsilon(1e-12));
  CHECK(bs_primal_value(1.0, 0.1, 0.4, kPow) == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(conjugacy_primal(1.0, 0.1, 0.4, kPow) == doctest::Approx(100.0).epsilon(1e-9));
  CHECK(bs_primal_marginal(1.0, 0.1, 0.4, kPow) == doctest::Approx(50.0));
}

TEST_CASE("dual objective is minimized at beta_hat") {
  for (const auto& U : {kPow, UtilitySpec::power(-1.0), UtilitySpec::power(0.3), UtilitySpec::log()}) {
    const double bh = bs_beta_hat(0.1, 0.4, U);
    const double at = bs_dual_objective(bh, 1.3, 0.1, 0.4, U);
    CHECK(at == doctest::Approx(bs_dual_value(1.3, 0.1, 0.4, U)).epsilon(1e-12));
    for (double f : {0.3, 0.7, 0.95, 1.05, 1.5}) CHECK(bs_dual_objective(f * bh, 1.3, 0.1, 0.4, U) > at);
  }
  // q = -1: the denominator vanishes at beta = 2 beta_hat
  CHECK_THROWS_AS(bs_dual_objective(0.04, 1.0, 0.1, 0.4, kPow), DomainError);
}

TEST_CASE("dual objective against direct quadrature") {
  // ∫ e^{-αt} E[V(γY_t)] dt with E[Z^q] = exp(-q(1-q)λ²t/2)
  const double a = 0.1, l = 0.4, y = 2.0, beta = 0.03;
  for (const auto& U : {UtilitySpec::power(-1.0), kPow}) {
    const double q = U.q();
    const double Vy = conjugate_value(U, y);
    auto f = [&](double t) {
      return std::exp(-a * t) * Vy * std::pow(beta, q) * std::exp(q * (a - beta) * t) *
             std::exp(-0.5 * q * (1 - q) * l * l * t);
    };
    const double T = 400.0;
    const double quad = simpson(f, 0.0, T) + bs_dual_objective_tail(beta, T, y, a, l, U);
    CHECK(quad == doctest::Approx(bs_dual_objective(beta, y, a, l, U)).epsilon(1e-8));
    CHECK(bs_dual_objective_tail(bs_beta_hat(a, l, U), 30.0, y, a, l, U) ==
          doctest::Approx(bs_dual_tail(30.0, y, a, l, U)).epsilon(1e-12));
  }
  // log: E[V(γY_t)] = -1 - log(βy) + (β - α + λ²/2)t
  auto g = [&](double t) { return std::exp(-a * t) * (-1 - std::log(beta * y) + (beta - a + 0.5 * l * l) * t); };
  CHECK(simpson(g, 0.0, 300.0) + bs_dual_objective_tail(beta, 300.0, y, a, l, UtilitySpec::log()) ==
        doctest::Approx(log_dual_objective(beta, y, a, l)).epsilon(1e-8));
}

TEST_CASE("infinite dual regime") {
  CHECK_THROWS_AS(bs_beta_hat(0.05, 0.4, kPow), InfiniteDualError);
  try {
    bs_beta_hat(0.05, 0.4, kPow);
  } catch (const InfiniteDualError& e) {
    CHECK(std::string(e.what()).find("v(y)<∞") != std::string::npos);
  }
  CHECK(bs_beta_hat(0.05, 0.4, UtilitySpec::power(-1.0)) > 0.0);
}

TEST_CASE("optimal wealth satisfies the first-order condition") {
  const double a = 0.1, l = 0.4, x = 1.0;
  for (const auto& U : {kPow, UtilitySpec::power(-1.0), UtilitySpec::log()}) {
    const double y = bs_primal_marginal(x, a, l, U);
    const double bh = bs_beta_hat(a, l, U);
    for (double t : {0.0, 1.0, 7.5})
      for (double w : {-1.0, 0.0, 2.0}) {
        const double X = bs_optimal_wealth(x, t, w, l, U);
        const double Z = std::exp(-l * w - 0.5 * l * l * t);
        const double gammaY = std::exp(a * t) * bh * std::exp(-bh * t) * y * Z;
        CHECK(marginal(U, X) == doctest::Approx(gammaY).epsilon(1e-12));
      }
  }
}

TEST_CASE("Merton wealth equals the closed-form optimum") {
  const TimeGrid g(5.0, 100);
  const auto model = MarketModel::black_scholes(0.4, 0.2);
  const auto W = simulate_driver(g, PathRange{0, 20}, 12, NoiseStream::W);
  const auto lam = mpr_for(model, W, std::nullopt);
  const auto X = simulate_wealth(model, Strategy::constant(merton_fraction(0.4, 0.2, kPow)), W, lam, 1.0);
  const auto Xh = bs_optimal_wealth(1.0, W, 0.4, kPow);
  for (std::size_t p = 0; p < 20; ++p)
    for (std::size_t i = 0; i < g.nodes(); ++i) CHECK(X(p, i) == doctest::Approx(Xh(p, i)).epsilon(1e-11));
}

TEST_CASE("conditional mean of Z^q by brute simulation") {
  const double q = -1.0, l = 0.4, t = 1.0, u = 3.0, wt = 0.3;
  std::mt19937_64 gen(99);
  std::normal_distribution<double> n(0.0, 1.0);
  const int N = 400000;
  double s = 0, s2 = 0;
  for (int i = 0; i < N; ++i) {
    const double wu = wt + std::sqrt(u - t) * n(gen);
    const double zq = std::pow(std::exp(-l * wu - 0.5 * l * l * u), q);
    s += zq;
    s2 += zq * zq;
  }
  const double m = s / N, se = std::sqrt((s2 / N - m * m) / N);
  const double eq_t = std::exp(-q * l * wt - 0.5 * q * q * l * l * t);
  CHECK(std::abs(zq_conditional_mean(q, l, t, u, eq_t) - m) < 4 * se);
}

TEST_CASE("tails against quadrature of the closed-form integrands") {
  const double a = 0.1, l = 0.4, x = 1.0, T = 20.0;
  const double bh = bs_beta_hat(a, l, kPow), y = bs_primal_marginal(x, a, l, kPow);
  // E[U(X̂_t)] e^{-αt} = U(x) e^{-β̂t} for power
  CHECK(bs_primal_tail(T, x, a, l, kPow) ==
        doctest::Approx(simpson([&](double t) { return u_value(kPow, x) * std::exp(-bh * t); }, T, 3000.0))
            .epsilon(1e-7));
  CHECK(bs_budget_tail(T, x, y, a, l, kPow) ==
        doctest::Approx(simpson([&](double t) { return x * y * bh * std::exp(-bh * t); }, T, 3000.0)).epsilon(1e-7));
  // log: E[log X̂_t] = log x + λ²t/2
  const auto L = UtilitySpec::log();
  CHECK(bs_primal_tail(T, x, a, l, L) ==
        doctest::Approx(simpson([&](double t) { return std::exp(-a * t) * (std::log(x) + 0.08 * t); }, T, 600.0))
            .epsilon(1e-7));
  CHECK(bs_expected_deflated_wealth(5.0, x, a, l, kPow) == doctest::Approx(std::exp(-0.1)));
}

TEST_CASE("E[1/B_t] for the Bessel-3 process by brute simulation") {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> n(0.0, 1.0);
  const int N = 400000;
  const double t = 1.0;
  double s = 0, s2 = 0;
  for (int i = 0; i < N; ++i) {
    const double a = 1.0 + std::sqrt(t) * n(gen), b = std::sqrt(t) * n(gen), c = std::sqrt(t) * n(gen);
    const double v = 1.0 / std::sqrt(a * a + b * b + c * c);
    s += v;
    s2 += v * v;
  }
  const double m = s / N, se = std::sqrt((s2 / N - m * m) / N);
  CHECK(std::abs(bessel_reciprocal_mean(t) - m) < 4 * se);
  CHECK(bessel_reciprocal_mean(1.0) == doctest::Approx(0.6826894921).epsilon(1e-9));
}
