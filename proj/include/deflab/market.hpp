#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "deflab/grid.hpp"
#include "deflab/rng.hpp"

namespace deflab {

/// Volatility: a constant, or piecewise constant through (t_i, σ_i), right-continuous.
class VolSpec {
 public:
  static VolSpec constant(double sigma);
  static VolSpec tabulated(std::vector<double> t, std::vector<double> sigma);

  double at(double t) const;
  bool is_constant() const { return t_.size() == 1; }
  std::string describe() const;

 private:
  VolSpec(std::vector<double> t, std::vector<double> s) : t_(std::move(t)), s_(std::move(s)) {}
  std::vector<double> t_;
  std::vector<double> s_;
};

struct BlackScholes {
  double lambda;
  VolSpec sigma;
};

/// λ_t = 1/B_t with B a 3-D Bessel process started at 1.
struct Bessel3Market {
  VolSpec sigma;
};

class MarketModel {
 public:
  using Variant = std::variant<BlackScholes, Bessel3Market>;

  static MarketModel black_scholes(double lambda, double sigma);
  static MarketModel black_scholes(double lambda, VolSpec sigma);
  static MarketModel bessel3(VolSpec sigma);

  const Variant& variant() const { return v_; }
  bool is_bessel() const { return std::holds_alternative<Bessel3Market>(v_); }
  /// Constant market price of risk; throws UnsupportedError for the Bessel market.
  double bs_lambda() const;
  double sigma_at(double t) const;
  std::string describe() const;

 private:
  explicit MarketModel(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

/// Fraction θ of wealth held in the stock, π = θX.
class Strategy {
 public:
  using Feedback = std::function<double(double t, double lambda)>;

  static Strategy constant(double theta);
  static Strategy feedback(Feedback f, std::string name);

  double at(double t, double lambda) const;
  bool is_constant() const { return !f_; }
  std::string describe() const { return name_; }

 private:
  Strategy(double theta, Feedback f, std::string name)
      : theta_(theta), f_(std::move(f)), name_(std::move(name)) {}
  double theta_;
  Feedback f_;
  std::string name_;
};

struct BrownianPair {
  PathBundle W;
  PathBundle W_perp;
};

/// Brownian path W_i = Σ_{j<i} √Δt_j z_j from one noise stream, W_0 = 0.
PathBundle simulate_driver(const TimeGrid& grid, PathRange range, std::uint64_t seed, NoiseStream stream);

BrownianPair simulate_brownian(const TimeGrid& grid, PathRange range, std::uint64_t seed);
inline BrownianPair simulate_brownian(const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed) {
  return simulate_brownian(grid, PathRange{0, n_paths}, seed);
}

enum class BesselMethod { Euler, Norm3d };

struct Bessel3Paths {
  PathBundle B;
  /// Euler: the driving W. Norm3d: the radial driver ΔW_i = <V_i, ΔV_i>/|V_i| of
  /// V = (1,0,0) + 3-D Brownian motion, exactly Brownian in law.
  std::optional<PathBundle> W;
  std::size_t clamp_count = 0;

  static constexpr double kClampFloor = 1e-8;
  static constexpr double kMaxClampRate = 1e-4;
  double clamp_rate() const;
  bool valid() const { return clamp_rate() <= kMaxClampRate; }
};

Bessel3Paths simulate_bessel3(const TimeGrid& grid, PathRange range, std::uint64_t seed, BesselMethod method);
inline Bessel3Paths simulate_bessel3(const TimeGrid& grid, std::size_t n_paths, std::uint64_t seed,
                                     BesselMethod method) {
  return simulate_bessel3(grid, PathRange{0, n_paths}, seed, method);
}

/// Euler scheme B_{i+1} = max(B_i + Δt/B_i + ΔW_i, ε) driven by a given W.
Bessel3Paths bessel3_euler_from(const PathBundle& W);

/// Keep every `factor`-th node; the grid is coarsened accordingly.
PathBundle coarsen(const PathBundle& b, std::size_t factor);

/// λ = 1/B elementwise.
PathBundle mpr_path(const PathBundle& B);

/// λ for the simulation grid and path range of `like`.
PathBundle mpr_for(const MarketModel& model, const PathBundle& like, const std::optional<PathBundle>& B);

/// Everything a block of paths needs from the market: drivers, B and λ.
struct MarketPaths {
  PathBundle W;
  std::optional<PathBundle> W_perp;
  std::optional<PathBundle> B;
  PathBundle lambda;
  std::size_t clamp_count = 0;
};

/// Simulates the drivers of one path block. The Bessel market uses `method` and takes
/// W from it; W⊥ is drawn only when `with_perp` is set.
MarketPaths simulate_market(const MarketModel& model, const TimeGrid& grid, PathRange range, std::uint64_t seed,
                            BesselMethod method = BesselMethod::Norm3d, bool with_perp = false);

/// Log-Euler X_{i+1} = X_i exp((σθλ - σ²θ²/2)Δt + σθΔW), θ = strat(t_i, λ_i), σ = σ(t_i).
PathBundle simulate_wealth(const MarketModel& model, const Strategy& strat, const PathBundle& W,
                           const PathBundle& lambda, double x);

/// E_i = exp(Σ_{j<i} [a_j ΔW_j + b_j ΔW⊥_j - (a_j² + b_j²)Δt_j/2]).
PathBundle stochastic_exponential(const PathBundle& a, const PathBundle& b, const PathBundle& W,
                                  const PathBundle& W_perp);
/// One-driver form, E(a·W).
PathBundle stochastic_exponential(const PathBundle& a, const PathBundle& W);
/// Constant integrands.
PathBundle stochastic_exponential(double a, const PathBundle& W);

}  // namespace deflab
