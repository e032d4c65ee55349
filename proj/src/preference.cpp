#include "deflab/preference.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "deflab/errors.hpp"

namespace deflab {

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    std::ostringstream os;
    os << what << " must be a positive finite real, got " << v;
    throw DomainError(os.str());
  }
}

}  // namespace

UtilitySpec UtilitySpec::power(double p) {
  if (!std::isfinite(p) || !(p < 1.0) || p == 0.0) {
    std::ostringstream os;
    os << "power utility needs p < 1 and p != 0, got p = " << p;
    throw DomainError(os.str());
  }
  // 1 - q = 1/(1 - p)
  const double q = 1.0 - 1.0 / (1.0 - p);
  return UtilitySpec(Kind::Power, p, q);
}

UtilitySpec UtilitySpec::log() { return UtilitySpec(Kind::Log, 0.0, 0.0); }

std::string UtilitySpec::describe() const {
  if (is_log()) return "log";
  std::ostringstream os;
  os << "power(p=" << p_ << ",q=" << q_ << ")";
  return os.str();
}

double u_value(const UtilitySpec& u, double x) {
  require_positive(x, "wealth x");
  if (u.is_log()) return std::log(x);
  return std::pow(x, u.p()) / u.p();
}

double marginal(const UtilitySpec& u, double x) {
  require_positive(x, "wealth x");
  if (u.is_log()) return 1.0 / x;
  return std::pow(x, u.p() - 1.0);
}

double inverse_marginal(const UtilitySpec& u, double y) {
  require_positive(y, "dual variable y");
  if (u.is_log()) return 1.0 / y;
  return std::pow(y, 1.0 / (u.p() - 1.0));
}

double conjugate_value(const UtilitySpec& u, double y) {
  require_positive(y, "dual variable y");
  if (u.is_log()) return -(1.0 + std::log(y));
  return -std::pow(y, u.q()) / u.q();
}

double conjugate_derivative(const UtilitySpec& u, double y) {
  return -inverse_marginal(u, y);
}

double fenchel_gap(const UtilitySpec& u, double x, double y) {
  return conjugate_value(u, y) - u_value(u, x) + x * y;
}

double u_value_extended(const UtilitySpec& u, double x) {
  if (x == 0.0) {
    if (u.is_log() || u.p() < 0.0) return -std::numeric_limits<double>::infinity();
    return 0.0;
  }
  return u_value(u, x);
}

double conjugate_value_extended(const UtilitySpec& u, double y) {
  if (y == 0.0) {
    if (u.is_log() || u.q() < 0.0) return std::numeric_limits<double>::infinity();
    return 0.0;
  }
  return conjugate_value(u, y);
}

}  // namespace deflab
