#pragma once

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "deflab/grid.hpp"

namespace deflab {

/// dκ = e^{-αt} dt, so κ(t) = (1 - e^{-αt})/α and κ_∞ = 1/α.
struct ExponentialRate {
  double alpha;
};

/// κ(t) = P[T <= t] for an exponential horizon T with the given hazard rate.
struct RandomHorizonRate {
  double hazard;
};

/// κ(t) = 1{t >= T}: utility of wealth at the deterministic date T.
struct StoppingIndicator {
  double horizon;
};

/// Piecewise-linear κ through (t_i, κ_i), constant after the last knot.
struct Tabulated {
  std::vector<double> t;
  std::vector<double> kappa;
};

/// The finite weighting measure κ on time. Immutable once constructed; each
/// factory validates κ(0) = 0, monotonicity and finiteness of κ_∞.
class DiscountMeasure {
 public:
  using Variant = std::variant<ExponentialRate, RandomHorizonRate, StoppingIndicator, Tabulated>;

  static DiscountMeasure exponential(double alpha);
  static DiscountMeasure random_horizon(double hazard);
  static DiscountMeasure stopping(double horizon);
  static DiscountMeasure tabulated(std::vector<double> t, std::vector<double> kappa);

  /// Two-column CSV "t,kappa" with a header row and strictly increasing t.
  static DiscountMeasure read_csv(std::istream& in);
  static DiscountMeasure load_csv(const std::string& path);

  const Variant& variant() const { return v_; }
  bool has_density() const;
  std::string describe() const;

 private:
  explicit DiscountMeasure(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

double kappa_at(const DiscountMeasure& m, double t);

/// Δκ_i = κ(t_{i+1}) - κ(t_i), i = 0..N-1.
std::vector<double> kappa_increments(const DiscountMeasure& m, const TimeGrid& grid);

/// γ_t = (dκ_t/dt)^{-1}; throws UnsupportedError when κ has no density.
double gamma_at(const DiscountMeasure& m, double t);

double total_mass(const DiscountMeasure& m);

/// κ_∞ - κ(t): the weight an estimator truncated at t leaves out.
double tail_mass(const DiscountMeasure& m, double t);

/// An Exp(hazard) horizon independent of the market turns ∫_0^T e^{-αt}U dt into
/// ∫_0^∞ e^{-(α+hazard)t}U dt.
DiscountMeasure collapse_random_horizon(double alpha, double hazard);

}  // namespace deflab
