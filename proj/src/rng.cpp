#include "deflab/rng.hpp"

#include <cmath>
#include <numbers>

namespace deflab {

namespace {

constexpr std::uint32_t kMul0 = 0xD2511F53u;
constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(prod >> 32);
  lo = static_cast<std::uint32_t>(prod);
}

}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kMul0, ctr[0], hi0, lo0);
    mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

double to_open_uniform(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 12;
  // 52 bits so the half-offset top value 1 - 2^-53 stays representable
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

GaussianStream::GaussianStream(std::uint64_t seed, NoiseStream stream, std::uint64_t path)
    : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
      stream_(static_cast<std::uint32_t>(stream)),
      path_lo_(static_cast<std::uint32_t>(path)),
      path_hi_(static_cast<std::uint32_t>(path >> 32)) {}

std::array<double, 2> GaussianStream::pair(std::uint32_t j) const {
  const auto r = philox4x32_10({j, stream_, path_lo_, path_hi_}, key_);
  const double u1 = to_open_uniform(r[0], r[1]);
  const double u2 = to_open_uniform(r[2], r[3]);
  const double rad = std::sqrt(-2.0 * std::log(u1));
  const double ang = 2.0 * std::numbers::pi * u2;
  return {rad * std::cos(ang), rad * std::sin(ang)};
}

double GaussianStream::normal(std::uint64_t k) const {
  return pair(static_cast<std::uint32_t>(k / 2))[k % 2];
}

void GaussianStream::fill(std::span<double> out, std::uint64_t offset) const {
  std::size_t i = 0;
  std::uint64_t k = offset;
  if (k % 2 == 1 && i < out.size()) {
    out[i++] = normal(k++);
  }
  for (; i + 1 < out.size(); i += 2, k += 2) {
    const auto z = pair(static_cast<std::uint32_t>(k / 2));
    out[i] = z[0];
    out[i + 1] = z[1];
  }
  if (i < out.size()) out[i] = normal(k);
}

double GaussianStream::uniform(std::uint64_t k) const {
  const auto r = philox4x32_10({static_cast<std::uint32_t>(k / 2), stream_, path_lo_, path_hi_}, key_);
  return k % 2 == 0 ? to_open_uniform(r[0], r[1]) : to_open_uniform(r[2], r[3]);
}

}  // namespace deflab
