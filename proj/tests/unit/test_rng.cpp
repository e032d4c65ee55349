#include <cmath>
#include <vector>

#include "doctest.h"
#include "deflab/rng.hpp"

using namespace deflab;

// Known-answer vectors published with the Random123 reference implementation.
TEST_CASE("Philox4x32-10 known answers") {
  struct Kat {
    PhiloxCounter ctr;
    PhiloxKey key;
    PhiloxCounter expected;
  };
  const Kat kats[] = {
      {{0, 0, 0, 0}, {0, 0}, {0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8}},
      {{0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff},
       {0xffffffff, 0xffffffff},
       {0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd}},
      {{0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344},
       {0xa4093822, 0x299f31d0},
       {0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1}},
  };
  for (const auto& k : kats) CHECK(philox4x32_10(k.ctr, k.key) == k.expected);
}

TEST_CASE("open uniforms stay inside (0, 1)") {
  CHECK(to_open_uniform(0, 0) > 0.0);
  CHECK(to_open_uniform(0xffffffff, 0xffffffff) < 1.0);
}

TEST_CASE("Gaussian stream moments") {
  const GaussianStream s(42, NoiseStream::W, 7);
  std::vector<double> z(200000);
  s.fill(z);
  double m = 0, m2 = 0, m4 = 0;
  for (double v : z) {
    m += v;
    m2 += v * v;
    m4 += v * v * v * v;
  }
  const double n = z.size();
  m /= n;
  m2 /= n;
  m4 /= n;
  CHECK(std::abs(m) < 4.0 / std::sqrt(n));
  CHECK(m2 == doctest::Approx(1.0).epsilon(4.0 * std::sqrt(2.0 / n)));
  CHECK(m4 == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("draws are addressable and reproducible") {
  const GaussianStream a(1, NoiseStream::W, 3), b(1, NoiseStream::W, 3);
  std::vector<double> z(50);
  a.fill(z, 10);
  for (std::size_t i = 0; i < z.size(); ++i) CHECK(z[i] == b.normal(10 + i));
}

TEST_CASE("streams, paths and seeds are uncorrelated") {
  const std::size_t n = 100000;
  auto corr = [&](const GaussianStream& a, const GaussianStream& b) {
    std::vector<double> x(n), y(n);
    a.fill(x);
    b.fill(y);
    double s = 0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s / n;
  };
  const double band = 4.0 / std::sqrt(double(n));
  CHECK(std::abs(corr(GaussianStream(9, NoiseStream::W, 0), GaussianStream(9, NoiseStream::WPerp, 0))) < band);
  CHECK(std::abs(corr(GaussianStream(9, NoiseStream::W, 0), GaussianStream(9, NoiseStream::W, 1))) < band);
  CHECK(std::abs(corr(GaussianStream(9, NoiseStream::W, 0), GaussianStream(10, NoiseStream::W, 0))) < band);
}
