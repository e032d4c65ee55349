#include <cmath>
#include <vector>

#include "doctest.h"
#include "deflab/deflator.hpp"
#include "deflab/errors.hpp"
#include "deflab/market.hpp"

using namespace deflab;

namespace {

const TimeGrid kGrid(10.0, 500);

}  // namespace

TEST_CASE("constant beta: R = y exp(-beta kappa(t)) in kappa form") {
  const auto kappa = DiscountMeasure::exponential(0.1);
  const PathRange r{0, 2};
  DeflatorSpec spec;
  spec.base = DeflatorSpec::Base::UnitProcess;
  spec.y = 1.5;
  const auto S = build_S(spec, nullptr, kGrid, r);
  const auto T = build_triple(S, BetaControl::constant(0.3), kappa, Convention::KappaForm);
  for (std::size_t i = 0; i < kGrid.nodes(); ++i) {
    const double ref = 1.5 * std::exp(-0.3 * kappa_at(kappa, kGrid.time(i)));
    CHECK(T.R(1, i) == doctest::Approx(ref).epsilon(1e-12));
    CHECK(T.Y(1, i) == doctest::Approx(0.3 * ref).epsilon(1e-12));
  }
  const auto Tl = build_triple(S, BetaControl::constant(0.3), kappa, Convention::LebesgueForm);
  CHECK(Tl.R(0, kGrid.steps()) == doctest::Approx(1.5 * std::exp(-3.0)).epsilon(1e-12));
}

TEST_CASE("release weights telescope: X = x, S = 1 gives M = x") {
  const auto kappa = DiscountMeasure::exponential(0.2);
  const PathRange r{0, 1};
  DeflatorSpec spec;
  spec.base = DeflatorSpec::Base::UnitProcess;
  const auto S = build_S(spec, nullptr, kGrid, r);
  const auto T = build_triple(S, BetaControl::constant(0.7), kappa, Convention::KappaForm);
  const auto X = PathBundle::filled(kGrid, r, 3.0);
  const auto M = assemble_M(X, T);
  for (std::size_t i = 0; i < kGrid.nodes(); ++i) CHECK(M(0, i) == doctest::Approx(3.0).epsilon(1e-12));
  // budget ∫XY dκ over [0, T] is x(1 - e^{-βκ(T)})
  double budget = 0;
  for (std::size_t i = 0; i < kGrid.steps(); ++i) budget += X(0, i) * T.rho(0, i);
  CHECK(budget == doctest::Approx(3.0 * -std::expm1(-0.7 * kappa_at(kappa, 10.0))).epsilon(1e-12));
}

TEST_CASE("kappa form with beta*gamma equals Lebesgue form with beta") {
  const auto kappa = DiscountMeasure::exponential(0.1);
  const PathRange r{0, 3};
  const auto W = simulate_driver(kGrid, r, 4, NoiseStream::W);
  const auto model = MarketModel::black_scholes(0.4, 0.2);
  const auto lam = mpr_for(model, W, std::nullopt);
  const auto Z = build_Z(PsiSpec::zero(), model, W, nullptr, lam);
  DeflatorSpec spec;
  spec.y = 2.0;
  const auto S = build_S(spec, &Z, kGrid, r);
  const auto leb = build_triple(S, BetaControl::constant(0.05), kappa, Convention::LebesgueForm);
  const auto kap = build_triple(
      S, BetaControl::feedback([](double t, double) { return 0.05 * std::exp(0.1 * t); }, "b*gamma"), kappa,
      Convention::KappaForm, &lam);
  // left-point beta on each kappa cell: relative gap in the exponent is about alpha*dt/2
  for (std::size_t p = 0; p < 3; ++p)
    for (std::size_t i = 0; i < kGrid.nodes(); ++i) {
      CHECK(kap.R(p, i) == doctest::Approx(leb.R(p, i)).epsilon(1e-3));
      CHECK(kap.Y(p, i) == doctest::Approx(std::exp(0.1 * kGrid.time(i)) * leb.Y(p, i)).epsilon(1e-3));
    }
}

TEST_CASE("minimal deflator in Black-Scholes: exact and discrete schemes") {
  const TimeGrid g(1.0, 4000);
  const PathRange r{0, 10};
  const auto model = MarketModel::black_scholes(0.4, 0.2);
  const auto bw = simulate_brownian(g, r, 6);
  const auto lam = mpr_for(model, bw.W, std::nullopt);
  const auto psi = PsiSpec::constant(0.3);
  const auto Ze = build_Z(psi, model, bw.W, &bw.W_perp, lam);
  const auto Zd = build_Z(psi, model, bw.W, &bw.W_perp, lam, nullptr, ZScheme::Discrete);
  for (std::size_t p = 0; p < 10; ++p) {
    const double ref =
        std::exp(-0.4 * bw.W(p, g.steps()) - 0.3 * bw.W_perp(p, g.steps()) - 0.5 * (0.16 + 0.09) * 1.0);
    CHECK(Ze(p, g.steps()) == doctest::Approx(ref).epsilon(1e-12));
    CHECK(Zd(p, g.steps()) == doctest::Approx(ref).epsilon(1e-9));
  }
}

TEST_CASE("minimal deflator in the Bessel market is 1/B") {
  const TimeGrid g(1.0, 100);
  const auto model = MarketModel::bessel3(VolSpec::constant(0.2));
  const auto mp = simulate_market(model, g, PathRange{0, 20}, 3);
  REQUIRE(mp.B);
  const auto Z = build_Z(PsiSpec::zero(), model, mp.W, nullptr, mp.lambda, &*mp.B);
  for (std::size_t p = 0; p < 20; ++p)
    for (std::size_t i = 0; i < g.nodes(); ++i) CHECK(Z(p, i) == doctest::Approx(1.0 / (*mp.B)(p, i)));
}

TEST_CASE("controls reject invalid values") {
  CHECK_THROWS_AS(BetaControl::constant(-0.1).at(0.0, 0.0), ControlError);
  const auto f = BetaControl::feedback([](double, double l) { return -l; }, "bad");
  CHECK_THROWS_AS(f.at(1.0, 0.5), ControlError);
  const auto tab = BetaControl::tabulated({0.0, 2.0}, {0.1, 0.3});
  CHECK(tab.at(1.0, 0.0) == 0.1);
  CHECK(tab.at(2.0, 0.0) == 0.3);
  CHECK(tab.at(9.0, 0.0) == 0.3);
}

TEST_CASE("structural checks") {
  const PathRange r{0, 2};
  DeflatorSpec spec;
  spec.base = DeflatorSpec::Base::Explicit;
  spec.y = 1.0;
  spec.explicit_S = PathBundle::filled(kGrid, r, 2.0);
  CHECK_THROWS_AS(build_S(spec, nullptr, kGrid, r), StructuralError);
  spec.base = DeflatorSpec::Base::LocalMartingale;
  CHECK_THROWS_AS(build_S(spec, nullptr, kGrid, r), StructuralError);
  const auto a = PathBundle::filled(kGrid, r, 1.0);
  const auto b = PathBundle::filled(TimeGrid(5.0, 500), r, 1.0);
  CHECK_THROWS_AS(multiply(a, b), StructuralError);
  CHECK(parse_convention("kappa") == Convention::KappaForm);
  CHECK(parse_convention("lebesgue") == Convention::LebesgueForm);
  CHECK_THROWS(parse_convention("other"));
}
