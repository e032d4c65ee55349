#pragma once

#include <string>

namespace deflab {

/// CRRA preference: power utility x^p/p (p < 1, p != 0) or logarithmic utility.
///
/// The conjugate exponent q solves 1 - q = 1/(1 - p); the logarithmic case is its
/// own variant with p = q = 0 by convention, never the p -> 0 limit of the power
/// formulas.
class UtilitySpec {
 public:
  enum class Kind { Power, Log };

  static UtilitySpec power(double p);
  static UtilitySpec log();

  Kind kind() const { return kind_; }
  bool is_log() const { return kind_ == Kind::Log; }
  double p() const { return p_; }
  double q() const { return q_; }

  std::string describe() const;

  friend bool operator==(const UtilitySpec&, const UtilitySpec&) = default;

 private:
  UtilitySpec(Kind kind, double p, double q) : kind_(kind), p_(p), q_(q) {}

  Kind kind_;
  double p_;
  double q_;
};

// All maps below require a strictly positive argument and throw DomainError otherwise.

double u_value(const UtilitySpec& u, double x);
double marginal(const UtilitySpec& u, double x);
double inverse_marginal(const UtilitySpec& u, double y);
double conjugate_value(const UtilitySpec& u, double y);
double conjugate_derivative(const UtilitySpec& u, double y);

/// V(y) - U(x) + xy, which is >= 0 and vanishes iff y = U'(x).
double fenchel_gap(const UtilitySpec& u, double x, double y);

/// U extended to x = 0 by its limit: -inf for log and p < 0, 0 for 0 < p < 1.
/// Used by estimators so that bankruptcy propagates as an explicit sentinel.
double u_value_extended(const UtilitySpec& u, double x);

/// V extended to y = 0 by its limit: +inf for log and q < 0, 0 for 0 < q < 1.
double conjugate_value_extended(const UtilitySpec& u, double y);

}  // namespace deflab
