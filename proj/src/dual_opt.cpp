#include "deflab/dual_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "deflab/discount.hpp"
#include "deflab/errors.hpp"
#include "deflab/parallel.hpp"
#include "deflab/verify.hpp"

namespace deflab {

namespace {

constexpr double kInvPhi = 0.6180339887498949;  // (√5 - 1)/2

struct Search {
  const ScalarMinProblem& prob;
  ScalarMinResult& res;
  double best_beta = 0.0;
  double best_value = 0.0;
  bool have_best = false;
  double last_beta = 0.0;

  double eval(double b) {
    last_beta = b;
    const double v = prob.objective(b);
    ++res.evaluations;
    if (!have_best || v < best_value) {
      best_beta = b;
      best_value = v;
      have_best = true;
    }
    return v;
  }

  // golden section on log β; the bracket width is measured in β
  void run(double lo, double hi) {
    double a = std::log(lo), d = std::log(hi);
    double c1 = d - kInvPhi * (d - a), c2 = a + kInvPhi * (d - a);
    double f1 = eval(std::exp(c1)), f2 = eval(std::exp(c2));
    while (std::exp(d) - std::exp(a) > prob.tol && d - a > 1e-15) {
      if (f1 <= f2) {
        d = c2;
        c2 = c1;
        f2 = f1;
        c1 = d - kInvPhi * (d - a);
        f1 = eval(std::exp(c1));
      } else {
        a = c1;
        c1 = c2;
        f1 = f2;
        c2 = a + kInvPhi * (d - a);
        f2 = eval(std::exp(c2));
      }
    }
  }
};

}  // namespace

ScalarMinResult minimize_constant_beta(const ScalarMinProblem& prob) {
  if (!prob.objective) throw DomainError("minimize_constant_beta: no objective");
  if (!(prob.lo > 0.0) || !(prob.hi > prob.lo) || !(prob.tol > 0.0))
    throw DomainError("minimize_constant_beta needs 0 < lo < hi and tol > 0");
  ScalarMinResult res;
  Search s{prob, res};
  double lo = prob.lo, hi = prob.hi;
  for (;;) {
    try {
      s.run(lo, hi);
      break;
    } catch (const DomainError& e) {
      if (res.retries >= 3) {
        std::ostringstream os;
        os << "minimize_constant_beta: domain error after 3 bracket shrinks: " << e.what();
        throw DomainError(os.str());
      }
      ++res.retries;
      const double bad = s.last_beta;
      const double pivot = s.have_best ? s.best_beta : std::sqrt(lo * hi);
      if (bad > pivot)
        hi = bad;
      else
        lo = bad;
      if (!(hi > lo)) throw DomainError("minimize_constant_beta: bracket collapsed after a domain error");
    }
  }
  res.beta = s.best_beta;
  res.value = s.best_value;
  return res;
}

namespace {

DiscountMeasure setup_kappa(const McDualSetup& s) { return DiscountMeasure::exponential(s.alpha); }

MarketPaths block_market(const McDualSetup& s, PathRange r, bool perp) {
  return simulate_market(s.model, s.grid, r, s.seed, BesselMethod::Norm3d, perp);
}

std::vector<double> block_dual(const McDualSetup& s, const MarketPaths& mp, double beta, const PsiSpec& psi,
                               const DiscountMeasure& kappa) {
  const auto Z = build_Z(psi, s.model, mp.W, mp.W_perp ? &*mp.W_perp : nullptr, mp.lambda,
                         mp.B ? &*mp.B : nullptr);
  DeflatorSpec spec;
  spec.y = s.y;
  const auto S = build_S(spec, &Z, s.grid, mp.W.range());
  const auto T = build_triple(S, BetaControl::constant(beta), kappa, Convention::LebesgueForm);
  return dual_samples(s.U, T.Y, kappa, Convention::LebesgueForm);
}

std::vector<double> concat(const std::vector<std::vector<double>>& parts) {
  std::vector<double> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

// Sample dual objective with constant β from per-node statistics g_i:
// power g = Z^q, log g = log Z. Nodes 0, stride, 2·stride, ... with cell masses dk.
struct NodeObjective {
  const UtilitySpec& U;
  double alpha;
  double Vy;
  std::vector<double> t, dk, g;

  double operator()(double beta) const {
    if (!(beta > 0.0)) throw DomainError("beta must be positive");
    double s = 0.0;
    if (U.is_log()) {
      const double lb = std::log(beta);
      for (std::size_t i = 0; i < t.size(); ++i) s += dk[i] * (Vy - lb - (alpha - beta) * t[i] - g[i]);
    } else {
      const double q = U.q();
      const double bq = std::pow(beta, q);
      for (std::size_t i = 0; i < t.size(); ++i) s += dk[i] * Vy * bq * std::exp(q * (alpha - beta) * t[i]) * g[i];
    }
    return s;
  }
};

}  // namespace

MCEstimate mc_dual_objective(double beta, const McDualSetup& setup, const PsiSpec& psi) {
  if (!(beta > 0.0)) throw DomainError("mc_dual_objective needs beta > 0");
  const auto kappa = setup_kappa(setup);
  const auto blocks = path_blocks(setup.n_paths);
  std::vector<std::vector<double>> parts(blocks.size());
  for_each_block(setup.n_paths, setup.threads, [&](std::size_t b, PathRange r) {
    const auto mp = block_market(setup, r, !psi.is_zero());
    parts[b] = block_dual(setup, mp, beta, psi, kappa);
  });
  return summarize(concat(parts), tail_mass(kappa, setup.grid.t_max()));
}

BetaProfile mc_beta_profile(const McDualSetup& setup, std::span<const double> betas, double probe, double lo,
                            double hi) {
  const auto& g = setup.grid;
  if (g.steps() % 2 != 0) throw StructuralError("beta profile needs an even step count for the coarse grid");
  const auto kappa = setup_kappa(setup);
  const auto dk = kappa_increments(kappa, g);
  const double Vy = conjugate_value(setup.U, setup.y);
  const std::size_t N = g.steps();
  const double h = 1e-3 * probe;

  // Evaluation points: the profile betas, then probe ± h for the per-path slope.
  std::vector<double> pts(betas.begin(), betas.end());
  pts.push_back(probe + h);
  pts.push_back(probe - h);

  const auto blocks = path_blocks(setup.n_paths);
  std::vector<std::vector<double>> node_sums(blocks.size());            // per block, per node
  std::vector<std::vector<std::vector<double>>> per_path(blocks.size());  // per block, per point, per path

  // f_p(β) = c(β) + Σ_i w_i(β) g_{p,i}; for log utility w = -Δκ for every β
  std::vector<std::vector<double>> w(pts.size(), std::vector<double>(N));
  std::vector<double> c(pts.size(), 0.0);
  for (std::size_t j = 0; j < pts.size(); ++j) {
    const double beta = pts[j];
    if (setup.U.is_log()) {
      const double lb = std::log(beta);
      for (std::size_t i = 0; i < N; ++i) {
        w[j][i] = -dk[i];
        c[j] += dk[i] * (Vy - lb - (setup.alpha - beta) * g.time(i));
      }
    } else {
      const double q = setup.U.q();
      const double bq = std::pow(beta, q);
      for (std::size_t i = 0; i < N; ++i) w[j][i] = dk[i] * Vy * bq * std::exp(q * (setup.alpha - beta) * g.time(i));
    }
  }

  for_each_block(setup.n_paths, setup.threads, [&](std::size_t b, PathRange r) {
    const auto mp = block_market(setup, r, false);
    const auto Z = build_Z(PsiSpec::zero(), setup.model, mp.W, nullptr, mp.lambda, mp.B ? &*mp.B : nullptr);
    std::vector<double> gp(N);
    std::vector<std::vector<double>> cols(N, std::vector<double>(r.count));
    per_path[b].assign(pts.size(), std::vector<double>(r.count));
    for (std::size_t p = 0; p < r.count; ++p) {
      for (std::size_t i = 0; i < N; ++i) {
        gp[i] = setup.U.is_log() ? std::log(Z(p, i)) : std::pow(Z(p, i), setup.U.q());
        cols[i][p] = gp[i];
      }
      double shared = 0.0;
      for (std::size_t j = 0; j < pts.size(); ++j) {
        if (j == 0 || !setup.U.is_log()) {
          shared = 0.0;
          for (std::size_t i = 0; i < N; ++i) shared += w[j][i] * gp[i];
        }
        per_path[b][j][p] = c[j] + shared;
      }
    }
    node_sums[b].resize(N);
    for (std::size_t i = 0; i < N; ++i) node_sums[b][i] = pairwise_sum(cols[i]);
  });

  std::vector<double> gbar(N);
  {
    std::vector<double> tmp(blocks.size());
    for (std::size_t i = 0; i < N; ++i) {
      for (std::size_t b = 0; b < blocks.size(); ++b) tmp[b] = node_sums[b][i];
      gbar[i] = pairwise_sum(tmp) / static_cast<double>(setup.n_paths);
    }
  }

  BetaProfile out;
  out.n_paths = setup.n_paths;
  out.seed = setup.seed;
  out.betas.assign(betas.begin(), betas.end());
  auto point_samples = [&](std::size_t j) {
    std::vector<double> v;
    for (std::size_t b = 0; b < blocks.size(); ++b) v.insert(v.end(), per_path[b][j].begin(), per_path[b][j].end());
    return v;
  };
  for (std::size_t j = 0; j < betas.size(); ++j)
    out.values.push_back(summarize(point_samples(j), tail_mass(kappa, g.t_max())));

  NodeObjective fine{setup.U, setup.alpha, Vy, {}, dk, gbar};
  fine.t.resize(N);
  for (std::size_t i = 0; i < N; ++i) fine.t[i] = g.time(i);
  NodeObjective coarse{setup.U, setup.alpha, Vy, {}, {}, {}};
  for (std::size_t i = 0; i < N; i += 2) {
    coarse.t.push_back(g.time(i));
    coarse.dk.push_back(dk[i] + dk[i + 1]);
    coarse.g.push_back(gbar[i]);
  }

  const double tol = 1e-10;
  const auto rf = minimize_constant_beta({std::cref(fine), lo, hi, tol});
  const auto rc = minimize_constant_beta({std::cref(coarse), lo, hi, tol});
  out.beta_star = rf.beta;
  out.value_star = rf.value;
  out.beta_star_coarse = rc.beta;
  out.beta_star_extrapolated = 2.0 * rf.beta - rc.beta;

  const double hc = 1e-3 * rf.beta;
  out.curvature = (fine(rf.beta + hc) - 2.0 * fine(rf.beta) + fine(rf.beta - hc)) / (hc * hc);

  const auto up = point_samples(pts.size() - 2);
  const auto dn = point_samples(pts.size() - 1);
  std::vector<double> slope(up.size());
  for (std::size_t p = 0; p < up.size(); ++p) slope[p] = (up[p] - dn[p]) / (2.0 * h);
  out.slope_se = summarize(slope).std_error;
  out.uncertainty = out.curvature > 0.0 ? out.slope_se / out.curvature : std::numeric_limits<double>::infinity();
  return out;
}

bool unimodal_within(std::span<const MCEstimate> values, double k) {
  if (values.size() < 3) return true;
  std::size_t imin = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i].mean < values[imin].mean) imin = i;
  for (std::size_t i = 1; i <= imin; ++i)
    if (values[i].mean > values[i - 1].mean + k * std::max(values[i].std_error, values[i - 1].std_error)) return false;
  for (std::size_t i = imin + 1; i < values.size(); ++i)
    if (values[i].mean < values[i - 1].mean - k * std::max(values[i].std_error, values[i - 1].std_error)) return false;
  return true;
}

PsiCheckResult psi_zero_optimality_check(const McDualSetup& setup, double beta, std::span<const double> psis) {
  if (!setup.U.is_log()) throw UnsupportedError("the psi = 0 optimum is established for log utility only");
  std::vector<double> all(psis.begin(), psis.end());
  if (std::find(all.begin(), all.end(), 0.0) == all.end()) all.insert(all.begin(), 0.0);
  const std::size_t zero_at = static_cast<std::size_t>(std::find(all.begin(), all.end(), 0.0) - all.begin());

  const auto kappa = setup_kappa(setup);
  const auto blocks = path_blocks(setup.n_paths);
  std::vector<std::vector<std::vector<double>>> parts(blocks.size());
  for_each_block(setup.n_paths, setup.threads, [&](std::size_t b, PathRange r) {
    const auto mp = block_market(setup, r, true);
    parts[b].resize(all.size());
    for (std::size_t j = 0; j < all.size(); ++j) parts[b][j] = block_dual(setup, mp, beta, PsiSpec::constant(all[j]), kappa);
  });

  PsiCheckResult res;
  res.psis = all;
  std::vector<std::vector<double>> samples(all.size());
  for (std::size_t j = 0; j < all.size(); ++j) {
    for (std::size_t b = 0; b < blocks.size(); ++b) samples[j].insert(samples[j].end(), parts[b][j].begin(), parts[b][j].end());
    res.objective.push_back(summarize(samples[j], tail_mass(kappa, setup.grid.t_max())));
  }
  double worst = 0.0;
  std::ostringstream detail;
  detail.precision(6);
  for (std::size_t j = 0; j < all.size(); ++j) {
    const auto d = paired_difference(samples[j], samples[zero_at]);
    res.diff_vs_zero.push_back(d);
    if (j == zero_at) continue;
    const double band = 3.0 * d.std_error + kExactFloor * std::max(1.0, std::abs(res.objective[zero_at].mean));
    const double r = d.mean >= 0.0 ? 0.0 : (band > 0.0 ? -d.mean / band : std::numeric_limits<double>::infinity());
    worst = std::max(worst, r);
    detail << "psi=" << all[j] << ": diff " << d.mean << " (SE " << d.std_error << "); ";
  }
  res.verdict = Verdict::from(worst <= 1.0, worst, 1.0, detail.str(), all.size() - 1);
  return res;
}

}  // namespace deflab
