#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace deflab {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
/// A pure function of (counter, key), so any (seed, stream, path, step) can be
/// drawn without touching any other draw.
using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key);

/// Independent Gaussian sub-streams of one seed.
enum class NoiseStream : std::uint32_t {
  W = 0,         // market driver
  WPerp = 1,     // orthogonal driver
  Bessel3D = 2,  // 3-D Brownian motion behind the Bessel process
  Horizon = 3,   // random-horizon sampling
  Candidates = 4,  // randomized admissible controls
};

/// Standard normals z_0, z_1, ... for one (seed, stream, path).
///
/// Block j of the counter {j, stream, path_lo, path_hi} under key = seed yields
/// two 52-bit uniforms and, through Box-Muller, z_{2j} and z_{2j+1}.
class GaussianStream {
 public:
  GaussianStream(std::uint64_t seed, NoiseStream stream, std::uint64_t path);

  std::array<double, 2> pair(std::uint32_t j) const;
  double normal(std::uint64_t k) const;

  /// out[i] = z_{offset + i}.
  void fill(std::span<double> out, std::uint64_t offset = 0) const;

  /// Uniform in (0, 1) from the same counter space (element k).
  double uniform(std::uint64_t k) const;

 private:
  PhiloxKey key_;
  std::uint32_t stream_;
  std::uint32_t path_lo_;
  std::uint32_t path_hi_;
};

/// 52-bit uniform in the open interval (0, 1) built from two 32-bit words.
double to_open_uniform(std::uint32_t hi, std::uint32_t lo);

}  // namespace deflab
