#include "deflab/closed_form.hpp"

#include <cmath>
#include <sstream>

#include "deflab/errors.hpp"

namespace deflab {

void BSParams::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("sigma must be positive");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw DomainError("alpha must be positive");
  if (!std::isfinite(lambda)) throw DomainError("lambda must be finite");
}

double merton_fraction(double lambda, double sigma, double p) {
  if (!(sigma > 0.0)) throw DomainError("merton_fraction needs sigma > 0");
  if (!(p < 1.0)) throw DomainError("merton_fraction needs p < 1");
  return lambda / (sigma * (1.0 - p));
}

double merton_fraction(double lambda, double sigma, const UtilitySpec& U) {
  return merton_fraction(lambda, sigma, U.is_log() ? 0.0 : U.p());
}

double bs_beta_hat(double alpha, double lambda, const UtilitySpec& U) {
  if (!(alpha > 0.0)) throw DomainError("bs_beta_hat needs alpha > 0");
  const double b = U.is_log() ? alpha : alpha + 0.5 * U.q() * lambda * lambda;
  if (!(b > 0.0)) {
    std::ostringstream os;
    os << "alpha + q lambda^2/2 = " << b << " <= 0 for alpha=" << alpha << ", lambda=" << lambda << ", "
       << U.describe();
    throw InfiniteDualError(os.str());
  }
  return b;
}

double bs_dual_objective(double beta, double y, double alpha, double lambda, const UtilitySpec& U) {
  if (U.is_log()) return log_dual_objective(beta, y, alpha, lambda);
  const double q = U.q();
  const double denom = q * beta + (1.0 - q) * (alpha + 0.5 * q * lambda * lambda);
  if (!(beta > 0.0) || !(denom > 0.0)) {
    std::ostringstream os;
    os << "dual objective undefined at beta=" << beta << " (denominator " << denom << ")";
    throw DomainError(os.str());
  }
  return conjugate_value(U, y) * std::pow(beta, q) / denom;
}

double log_dual_objective(double beta, double y, double alpha, double lambda) {
  if (!(beta > 0.0)) throw DomainError("log dual objective needs beta > 0");
  if (!(alpha > 0.0)) throw DomainError("log dual objective needs alpha > 0");
  const double V = conjugate_value(UtilitySpec::log(), y);
  return (V - 1.0 + lambda * lambda / (2.0 * alpha) + beta / alpha - std::log(beta)) / alpha;
}

double bs_dual_value(double y, double alpha, double lambda, const UtilitySpec& U) {
  if (U.is_log()) return log_dual_value(y, alpha, lambda);
  const double b = bs_beta_hat(alpha, lambda, U);
  return conjugate_value(U, y) * std::pow(b, U.q() - 1.0);
}

double log_dual_value(double y, double alpha, double lambda) {
  if (!(y > 0.0)) throw DomainError("log_dual_value needs y > 0");
  if (!(alpha > 0.0)) throw DomainError("log_dual_value needs alpha > 0");
  return (-std::log(y) - 1.0 + lambda * lambda / (2.0 * alpha) - std::log(alpha)) / alpha;
}

double bs_primal_value(double x, double alpha, double lambda, const UtilitySpec& U) {
  if (U.is_log()) return std::log(x) / alpha + lambda * lambda / (2.0 * alpha * alpha);
  return u_value(U, x) / bs_beta_hat(alpha, lambda, U);
}

double bs_primal_marginal(double x, double alpha, double lambda, const UtilitySpec& U) {
  if (U.is_log()) return 1.0 / (alpha * x);
  return marginal(U, x) / bs_beta_hat(alpha, lambda, U);
}

double bs_H(double t, double W_t, double alpha, double lambda, const UtilitySpec& U) {
  if (U.is_log()) return 1.0 / alpha;
  const double q = U.q();
  const double b = bs_beta_hat(alpha, lambda, U);
  return std::pow(b, -(1.0 - q)) * std::exp(-q * lambda * W_t - 0.5 * q * q * lambda * lambda * t);
}

double bs_optimal_wealth(double x, double t, double W_t, double lambda, const UtilitySpec& U) {
  const double q = U.is_log() ? 0.0 : U.q();
  return x * std::exp((1.0 - q) * lambda * W_t + 0.5 * (1.0 - q * q) * lambda * lambda * t);
}

PathBundle bs_optimal_wealth(double x, const PathBundle& W, double lambda, const UtilitySpec& U) {
  PathBundle X(W.grid(), W.range(), "X_hat");
  for (std::size_t p = 0; p < W.n_paths(); ++p)
    for (std::size_t i = 0; i < W.nodes(); ++i)
      X(p, i) = i == 0 ? x : bs_optimal_wealth(x, W.grid().time(i), W(p, i), lambda, U);
  return X;
}

double zq_conditional_mean(double q, double lambda, double t, double u, double eq_t) {
  if (!(t >= 0.0) || !(u >= t)) throw DomainError("zq_conditional_mean needs 0 <= t <= u");
  return eq_t * std::exp(-0.5 * q * (1.0 - q) * lambda * lambda * u);
}

double bs_expected_deflated_wealth(double t, double x, double alpha, double lambda, const UtilitySpec& U) {
  return x * std::exp(-bs_beta_hat(alpha, lambda, U) * t);
}

double bs_primal_tail(double T, double x, double alpha, double lambda, const UtilitySpec& U) {
  if (U.is_log()) {
    // E[log X̂_t] = log x + λ²t/2
    const double a = std::log(x), b = 0.5 * lambda * lambda;
    return std::exp(-alpha * T) * (a / alpha + b * (T / alpha + 1.0 / (alpha * alpha)));
  }
  const double bh = bs_beta_hat(alpha, lambda, U);
  return u_value(U, x) * std::exp(-bh * T) / bh;
}

double bs_dual_tail(double T, double y, double alpha, double lambda, const UtilitySpec& U) {
  if (U.is_log()) {
    // E[V(γŶ_t)] = -1 - log(αy) + λ²t/2
    const double a = -1.0 - std::log(alpha * y), b = 0.5 * lambda * lambda;
    return std::exp(-alpha * T) * (a / alpha + b * (T / alpha + 1.0 / (alpha * alpha)));
  }
  const double bh = bs_beta_hat(alpha, lambda, U);
  return conjugate_value(U, y) * std::pow(bh, U.q() - 1.0) * std::exp(-bh * T);
}

double bs_budget_tail(double T, double x, double y, double alpha, double lambda, const UtilitySpec& U) {
  return x * y * std::exp(-bs_beta_hat(alpha, lambda, U) * T);
}

double bs_dual_objective_tail(double beta, double T, double y, double alpha, double lambda, const UtilitySpec& U) {
  if (!(beta > 0.0)) throw DomainError("bs_dual_objective_tail needs beta > 0");
  if (U.is_log()) {
    // E[V(γY_t)] = -1 - log(βy) + (β - α + λ²/2)t
    const double a = -1.0 - std::log(beta * y), b = beta - alpha + 0.5 * lambda * lambda;
    return std::exp(-alpha * T) * (a / alpha + b * (T / alpha + 1.0 / (alpha * alpha)));
  }
  const double q = U.q();
  const double rate = q * beta + (1.0 - q) * bs_beta_hat(alpha, lambda, U);
  if (!(rate > 0.0)) throw DomainError("dual objective is infinite at this beta");
  return conjugate_value(U, y) * std::pow(beta, q) * std::exp(-rate * T) / rate;
}

double bessel_reciprocal_mean(double t) {
  if (!(t > 0.0)) return 1.0;
  return std::erf(1.0 / std::sqrt(2.0 * t));
}

}  // namespace deflab
