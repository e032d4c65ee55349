#include "deflab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "deflab/errors.hpp"

namespace deflab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> node_gamma(const DiscountMeasure& kappa, const TimeGrid& g, Convention conv) {
  std::vector<double> gam(g.nodes(), 1.0);
  if (conv == Convention::LebesgueForm)
    for (std::size_t i = 0; i < g.nodes(); ++i) gam[i] = gamma_at(kappa, g.time(i));
  return gam;
}

// |dev| measured against its band; <= 1 passes.
double band_ratio(double dev, double band) {
  if (dev <= band) return band > 0.0 ? std::max(dev, 0.0) / band : 0.0;
  return band > 0.0 ? dev / band : kInf;
}

std::string fmt(const char* label, double v) {
  std::ostringstream os;
  os.precision(6);
  os << label << v;
  return os.str();
}

}  // namespace

std::vector<double> budget_samples(const PathBundle& X, const DeflatedTriple& T) {
  X.require_compatible(T.R, "budget_samples");
  const std::size_t n = X.grid().steps();
  std::vector<double> out(X.n_paths());
  std::vector<double> terms(n);
  for (std::size_t p = 0; p < X.n_paths(); ++p) {
    for (std::size_t i = 0; i < n; ++i) terms[i] = X(p, i) * T.rho(p, i);
    out[p] = pairwise_sum(terms);
  }
  return out;
}

std::vector<double> primal_samples(const UtilitySpec& U, const PathBundle& X, std::span<const double> dkappa) {
  const std::size_t n = X.grid().steps();
  if (dkappa.size() != n) throw StructuralError("primal_samples: kappa increments do not match the grid");
  std::vector<double> out(X.n_paths());
  std::vector<double> terms(n);
  for (std::size_t p = 0; p < X.n_paths(); ++p) {
    for (std::size_t i = 0; i < n; ++i) terms[i] = dkappa[i] > 0.0 ? u_value_extended(U, X(p, i)) * dkappa[i] : 0.0;
    out[p] = pairwise_sum(terms);
  }
  return out;
}

std::vector<double> dual_samples(const UtilitySpec& U, const PathBundle& Y, const DiscountMeasure& kappa,
                                 Convention conv) {
  const auto& g = Y.grid();
  const auto dk = kappa_increments(kappa, g);
  const auto gam = node_gamma(kappa, g, conv);
  std::vector<double> out(Y.n_paths());
  std::vector<double> terms(g.steps());
  for (std::size_t p = 0; p < Y.n_paths(); ++p) {
    for (std::size_t i = 0; i < g.steps(); ++i)
      terms[i] = dk[i] > 0.0 ? conjugate_value_extended(U, gam[i] * Y(p, i)) * dk[i] : 0.0;
    out[p] = pairwise_sum(terms);
  }
  return out;
}

std::vector<double> foc_errors(const UtilitySpec& U, const PathBundle& X, const PathBundle& Y,
                               const DiscountMeasure& kappa, Convention conv) {
  X.require_compatible(Y, "foc_errors");
  const auto gam = node_gamma(kappa, X.grid(), conv);
  std::vector<double> out(X.n_paths(), 0.0);
  for (std::size_t p = 0; p < X.n_paths(); ++p) {
    double worst = 0.0;
    for (std::size_t i = 0; i < X.nodes(); ++i) {
      const double gy = gam[i] * Y(p, i);
      const double x = X(p, i);
      const double err = gy > 0.0 && x > 0.0 ? std::abs(marginal(U, x) - gy) / gy : kInf;
      worst = std::max(worst, err);
    }
    out[p] = worst;
  }
  return out;
}

MCEstimate estimate_budget(const PathBundle& X, const DeflatedTriple& T, const DiscountMeasure& kappa,
                           Convention expected) {
  if (T.convention != expected) {
    std::ostringstream os;
    os << "estimate_budget: deflator built in " << to_string(T.convention) << " form, asked for "
       << to_string(expected);
    throw StructuralError(os.str());
  }
  return summarize(budget_samples(X, T), tail_mass(kappa, X.grid().t_max()));
}

MCEstimate estimate_primal(const UtilitySpec& U, const PathBundle& X, const DiscountMeasure& kappa) {
  const auto dk = kappa_increments(kappa, X.grid());
  return summarize(primal_samples(U, X, dk), tail_mass(kappa, X.grid().t_max()));
}

MCEstimate estimate_dual(const UtilitySpec& U, const PathBundle& Y, const DiscountMeasure& kappa, Convention conv) {
  return summarize(dual_samples(U, Y, kappa, conv), tail_mass(kappa, Y.grid().t_max()));
}

Verdict budget_verdict(const MCEstimate& est, double x, double y, BudgetMode mode, double tail_bound,
                       double tail_allowance) {
  const double xy = x * y;
  const double floor = kExactFloor * std::max(1.0, std::abs(xy));
  const double thr = 3.0 * est.std_error + tail_allowance + floor;
  std::ostringstream os;
  os.precision(8);
  if (mode == BudgetMode::Inequality) {
    const double stat = est.mean - xy;
    os << "E[int XY] = " << est.mean << " vs xy = " << xy << " (SE " << est.std_error << ")";
    return Verdict::from(!est.infinite && stat <= thr, stat, thr, os.str());
  }
  const double stat = std::abs(est.mean + tail_bound - xy);
  os << "E[int XY] + tail = " << est.mean << " + " << tail_bound << " vs xy = " << xy << " (SE "
     << est.std_error << ")";
  return Verdict::from(!est.infinite && stat <= thr, stat, thr, os.str());
}

Verdict weak_duality_gap(const MCEstimate& u_est, const MCEstimate& v_est, double x, double y) {
  const double gap = v_est.mean + x * y - u_est.mean;
  const double se = std::hypot(u_est.std_error, v_est.std_error);
  const double floor = kExactFloor * std::max({1.0, std::abs(u_est.mean), std::abs(v_est.mean)});
  const double thr = -3.0 * se - floor;
  std::ostringstream os;
  os.precision(8);
  os << "v + xy - u = " << v_est.mean << " + " << x * y << " - " << u_est.mean << " (combined SE " << se << ")";
  const bool ok = std::isnan(gap) ? false : gap >= thr;
  return Verdict::from(ok, gap, thr, os.str());
}

Verdict martingale_mean_test(const CheckpointPanel& M) {
  const std::size_t K = M.times.size();
  if (K < 2) throw DomainError("martingale test needs at least two checkpoints");
  const auto base = M.column(0);
  double worst = 0.0;
  std::string where;
  std::size_t comparisons = 0;
  for (std::size_t k = 1; k < K; ++k) {
    const auto col = M.column(k);
    const auto d = paired_difference(col, base);
    const double floor = kExactFloor * std::max(1.0, std::abs(summarize(base).mean));
    const double r = band_ratio(std::abs(d.mean), 3.0 * d.std_error + floor);
    ++comparisons;
    if (r > worst) {
      worst = r;
      where = fmt("mean drift at t=", M.times[k]) + fmt(": ", d.mean) + fmt(" SE ", d.std_error);
    }
  }
  // increment orthogonality via a robust t-statistic of the centered cross product
  for (std::size_t k = 0; k + 1 < K; ++k) {
    const auto c = M.column(k);
    const auto next = M.column(k + 1);
    std::vector<double> inc(c.size());
    for (std::size_t p = 0; p < c.size(); ++p) inc[p] = next[p] - c[p];
    const auto ce = summarize(c);
    const auto ie = summarize(inc);
    const double n = static_cast<double>(c.size());
    const double sd_c = ce.std_error * std::sqrt(n);
    const double sd_i = ie.std_error * std::sqrt(n);
    const double scale = std::max(1.0, std::abs(ce.mean));
    if (sd_c <= kExactFloor * scale || sd_i <= kExactFloor * scale) continue;
    std::vector<double> prod(c.size());
    for (std::size_t p = 0; p < c.size(); ++p) prod[p] = (c[p] - ce.mean) * (inc[p] - ie.mean);
    const auto pe = summarize(prod);
    const double t = pe.std_error > 0.0 ? std::abs(pe.mean) / pe.std_error : 0.0;
    const double r = t / 3.0;
    ++comparisons;
    if (r > worst) {
      worst = r;
      where = fmt("increment correlation after t=", M.times[k]) + fmt(": corr ", pe.mean / (sd_c * sd_i)) +
              fmt(" robust t ", t);
    }
  }
  return Verdict::from(worst <= 1.0, worst, 1.0, where.empty() ? "all checkpoints flat" : where, comparisons);
}

Verdict martingale_mean_test(const PathBundle& M, std::span<const double> checkpoints) {
  return martingale_mean_test(CheckpointPanel::sample(M, checkpoints));
}

Verdict supermartingale_mean_test(const CheckpointPanel& M) {
  const std::size_t K = M.times.size();
  if (K < 2) throw DomainError("supermartingale test needs at least two checkpoints");
  double worst = 0.0;
  std::string where;
  for (std::size_t k = 0; k + 1 < K; ++k) {
    const auto a = M.column(k);
    const auto b = M.column(k + 1);
    const auto d = paired_difference(b, a);
    const double floor = kExactFloor * std::max(1.0, std::abs(summarize(a).mean));
    const double r = band_ratio(d.mean, 3.0 * d.std_error + floor);
    if (r > worst || where.empty()) {
      worst = std::max(worst, r);
      where = fmt("E[M] change on [", M.times[k]) + fmt(", ", M.times[k + 1]) + fmt("]: ", d.mean) +
              fmt(" SE ", d.std_error);
    }
  }
  return Verdict::from(worst <= 1.0, worst, 1.0, where, K - 1);
}

Verdict supermartingale_mean_test(const PathBundle& M, std::span<const double> checkpoints) {
  return supermartingale_mean_test(CheckpointPanel::sample(M, checkpoints));
}

Verdict potential_test(const CheckpointPanel& XR, const std::optional<DecayOracle>& oracle) {
  const std::size_t K = XR.times.size();
  auto mono = K >= 2 ? supermartingale_mean_test(XR) : Verdict::from(true, 0.0, 1.0, "single checkpoint");
  double worst = mono.statistic;
  std::string where = mono.detail;
  std::size_t comparisons = mono.comparisons;

  const auto last = summarize(XR.column(K - 1));
  const double t_last = XR.times[K - 1];
  const double oracle_last = oracle ? (*oracle)(t_last) : 0.0;
  const double bound = std::max(3.0 * last.std_error, oracle_last + 3.0 * last.std_error) +
                        kExactFloor * std::max(std::abs(oracle_last), 1e-300);
  const double r_last = last.mean <= bound ? (bound > 0.0 ? std::max(last.mean, 0.0) / bound : 0.0)
                                           : (bound > 0.0 ? last.mean / bound : kInf);
  ++comparisons;
  if (r_last > worst) {
    worst = r_last;
    where = fmt("final E[XR] at t=", t_last) + fmt(": ", last.mean) + fmt(" exceeds ", bound);
  }
  if (oracle) {
    for (std::size_t k = 0; k < K; ++k) {
      const auto e = summarize(XR.column(k));
      const double o = (*oracle)(XR.times[k]);
      const double r = band_ratio(std::abs(e.mean - o), 3.0 * e.std_error + kExactFloor * std::abs(o));
      ++comparisons;
      if (r > worst) {
        worst = r;
        where = fmt("E[XR] at t=", XR.times[k]) + fmt(": ", e.mean) + fmt(" vs oracle ", o) + fmt(" SE ", e.std_error);
      }
    }
  }
  return Verdict::from(worst <= 1.0, worst, 1.0, where, comparisons);
}

Verdict potential_test(const PathBundle& XR, std::span<const double> checkpoints,
                       const std::optional<DecayOracle>& oracle) {
  return potential_test(CheckpointPanel::sample(XR, checkpoints), oracle);
}

OwpPanels owp_panels(const PathBundle& X, const DeflatedTriple& T, std::span<const double> checkpoints) {
  X.require_compatible(T.R, "owp_panels");
  const auto& g = X.grid();
  const std::size_t K = checkpoints.size();
  std::vector<std::size_t> idx;
  for (double t : checkpoints) idx.push_back(g.node_at(t));
  OwpPanels out;
  out.lhs.times.assign(checkpoints.begin(), checkpoints.end());
  out.rhs.times = out.lhs.times;
  out.lhs.n_paths = out.rhs.n_paths = X.n_paths();
  out.lhs.values.resize(X.n_paths() * K);
  out.rhs.values.resize(X.n_paths() * K);
  std::vector<double> terms;
  for (std::size_t p = 0; p < X.n_paths(); ++p) {
    for (std::size_t k = 0; k < K; ++k) {
      const std::size_t i0 = idx[k];
      terms.assign(g.steps() - std::min(i0, g.steps()), 0.0);
      for (std::size_t i = i0; i < g.steps(); ++i) terms[i - i0] = X(p, i) * T.rho(p, i);
      out.lhs.values[p * K + k] = X(p, i0) * T.R(p, i0);
      out.rhs.values[p * K + k] = pairwise_sum(terms);
    }
  }
  return out;
}

Verdict owp_representation_check(const OwpPanels& panels, OwpMode mode, double tail_bound, double tail_allowance,
                                 const std::optional<DecayOracle>& oracle) {
  const std::size_t K = panels.lhs.times.size();
  double worst = 0.0;
  std::string where = "all checkpoints agree";
  if (mode == OwpMode::Pathwise) {
    if (!oracle) throw StructuralError("pathwise representation check needs an oracle");
    constexpr double kTol = 1e-8;
    for (std::size_t k = 0; k < K; ++k) {
      const double o = (*oracle)(panels.lhs.times[k]);
      for (std::size_t p = 0; p < panels.lhs.n_paths; ++p) {
        const double e1 = std::abs(panels.lhs(p, k) - o) / std::abs(o);
        const double e2 = std::abs(panels.rhs(p, k) + tail_bound - o) / std::abs(o);
        const double e = std::max(e1, e2);
        if (!(e <= worst)) {
          worst = e;
          where = fmt("worst relative error at t=", panels.lhs.times[k]) + fmt(": ", e);
        }
      }
    }
    return Verdict::from(worst < kTol, worst, kTol, where, K * panels.lhs.n_paths);
  }
  for (std::size_t k = 0; k < K; ++k) {
    const auto d = paired_difference(panels.lhs.column(k), panels.rhs.column(k));
    const double floor = kExactFloor * std::max(1.0, std::abs(tail_bound));
    const double r = band_ratio(std::abs(d.mean - tail_bound), 3.0 * d.std_error + tail_allowance + floor);
    if (r > worst) {
      worst = r;
      where = fmt("E[XR - int_t XY] at t=", panels.lhs.times[k]) + fmt(": ", d.mean) + fmt(" vs tail ", tail_bound) +
              fmt(" SE ", d.std_error);
    }
  }
  return Verdict::from(worst <= 1.0, worst, 1.0, where, K);
}

Verdict owp_representation_check(const PathBundle& X, const DeflatedTriple& T, std::span<const double> checkpoints,
                                 OwpMode mode, double tail_bound, double tail_allowance,
                                 const std::optional<DecayOracle>& oracle) {
  return owp_representation_check(owp_panels(X, T, checkpoints), mode, tail_bound, tail_allowance, oracle);
}

Verdict foc_check(std::span<const double> per_path_errors) {
  double worst = 0.0;
  for (double e : per_path_errors) worst = std::isnan(e) ? kInf : std::max(worst, e);
  return Verdict::from(worst < kFocTolerance, worst, kFocTolerance,
                       fmt("max |U'(X) - gamma Y| / (gamma Y) = ", worst), per_path_errors.size());
}

Verdict foc_check(const UtilitySpec& U, const PathBundle& X, const PathBundle& Y, const DiscountMeasure& kappa,
                  Convention conv) {
  return foc_check(foc_errors(U, X, Y, kappa, conv));
}

}  // namespace deflab
