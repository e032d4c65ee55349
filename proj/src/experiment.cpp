#include "deflab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "deflab/closed_form.hpp"
#include "deflab/deflator.hpp"
#include "deflab/dual_opt.hpp"
#include "deflab/errors.hpp"
#include "deflab/market.hpp"
#include "deflab/parallel.hpp"
#include "deflab/verify.hpp"

namespace deflab {

bool ExperimentResult::all_pass() const {
  return std::all_of(outcomes.begin(), outcomes.end(), [](const TestOutcome& o) { return o.verdict.pass(); });
}

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

bool selected(const ExperimentConfig& c, const std::string& test) {
  return std::find(c.tests.begin(), c.tests.end(), test) != c.tests.end();
}

[[noreturn]] void no_oracle(const std::string& test, const std::string& why) {
  throw ConfigError("test '" + test + "' needs a closed-form oracle: " + why);
}

// Everything fixed before simulation starts.
struct Plan {
  ExperimentConfig cfg;
  UtilitySpec U = UtilitySpec::log();
  MarketModel model = MarketModel::black_scholes(0.0, 1.0);
  DiscountMeasure kappa = DiscountMeasure::exponential(1.0);
  TimeGrid grid = TimeGrid(1.0, 1);
  double alpha = 0.0;  // effective α when κ is exponential
  double y = 0.0;
  std::optional<double> beta_hat;
  bool optimal_wealth = false;    // X is computed from the closed-form optimum (exact)
  bool optimal_strategy = false;  // X follows the optimal strategy, exactly or simulated
  bool optimal_beta = false;
  bool bs = false;
  std::optional<Strategy> strategy;  // simulated wealth
  BetaControl beta = BetaControl::constant(0.0);
  PsiSpec psi = PsiSpec::zero();
};

Plan make_plan(const ExperimentConfig& cfg) {
  cfg.validate();
  Plan P;
  P.cfg = cfg;
  P.U = cfg.utility_spec();
  P.model = cfg.market();
  P.kappa = cfg.discount();
  P.grid = cfg.grid();
  P.bs = cfg.model == "bs";
  P.psi = cfg.psi == 0.0 ? PsiSpec::zero() : PsiSpec::constant(cfg.psi);
  const bool closed = cfg.has_closed_form();
  if (closed) {
    P.alpha = cfg.effective_alpha();
    P.beta_hat = bs_beta_hat(P.alpha, cfg.lambda, P.U);
  }

  if (cfg.y) {
    P.y = *cfg.y;
  } else {
    if (!closed) throw ConfigError("y must be set when no closed-form u'(x) is available");
    P.y = bs_primal_marginal(cfg.x, P.alpha, cfg.lambda, P.U);
  }

  if (cfg.strategy == "optimal") {
    if (!closed) throw ConfigError("strategy = optimal needs a closed-form optimum (exponential kappa, BS or log)");
    if (cfg.theta_scale == 1.0) {
      P.optimal_wealth = P.optimal_strategy = true;
    } else if (P.bs) {
      P.strategy = Strategy::constant(cfg.theta_scale * merton_fraction(cfg.lambda, cfg.sigma, P.U));
    } else {
      // numeraire portfolio θσ = λ for log utility
      const double s = cfg.theta_scale, sigma = cfg.sigma;
      P.strategy = Strategy::feedback([s, sigma](double, double lambda) { return s * lambda / sigma; },
                                      "scaled numeraire");
    }
  } else if (cfg.strategy == "merton") {
    P.strategy = Strategy::constant(cfg.theta_scale * merton_fraction(cfg.lambda, cfg.sigma, P.U));
    P.optimal_strategy = closed && cfg.theta_scale == 1.0;
  } else {
    P.strategy = Strategy::constant(cfg.theta);
  }

  if (cfg.beta == "optimal") {
    if (!closed) throw ConfigError("beta = optimal needs a closed-form optimum");
    P.optimal_beta = true;
    const double bh = *P.beta_hat, a = P.alpha;
    if (cfg.convention == Convention::LebesgueForm)
      P.beta = BetaControl::constant(bh);
    else
      P.beta = BetaControl::feedback([bh, a](double t, double) { return bh * std::exp(a * t); }, "beta_hat*gamma");
  } else {
    P.beta = BetaControl::constant(cfg.beta_value);
  }
  return P;
}

struct BlockOut {
  std::vector<double> budget, primal, dual, foc, xr_final;
  CheckpointPanel M, XR, owp_lhs, owp_rhs;
  std::optional<PathBundle> X, Y, Mb;
};

PathBundle optimal_wealth(const Plan& P, const PathBundle& W, const PathBundle& Z0) {
  if (P.U.is_log()) {
    PathBundle X(Z0.grid(), Z0.range(), "X");
    for (std::size_t p = 0; p < X.n_paths(); ++p)
      for (std::size_t i = 0; i < X.nodes(); ++i) X(p, i) = P.cfg.x / Z0(p, i);
    return X;
  }
  return bs_optimal_wealth(P.cfg.x, W, P.cfg.lambda, P.U);
}

BlockOut run_block(const Plan& P, PathRange r, bool keep_samples, bool want_foc) {
  const auto& c = P.cfg;
  const auto mp = simulate_market(P.model, P.grid, r, c.seed, c.bessel_method, !P.psi.is_zero());
  const PathBundle* Bp = mp.B ? &*mp.B : nullptr;
  const auto Z0 = build_Z(PsiSpec::zero(), P.model, mp.W, nullptr, mp.lambda, Bp);
  const auto Z = P.psi.is_zero() ? Z0 : build_Z(P.psi, P.model, mp.W, &*mp.W_perp, mp.lambda, Bp);

  const auto X = P.optimal_wealth ? optimal_wealth(P, mp.W, Z0)
                                  : simulate_wealth(P.model, *P.strategy, mp.W, mp.lambda, c.x);
  DeflatorSpec ds;
  ds.y = P.y;
  const auto S = build_S(ds, &Z, P.grid, r);
  const auto T = build_triple(S, P.beta, P.kappa, c.convention, &mp.lambda);
  const auto M = assemble_M(X, T);
  const auto XR = multiply(X, T.R, "XR");
  const auto dk = kappa_increments(P.kappa, P.grid);

  BlockOut o;
  o.budget = budget_samples(X, T);
  o.primal = primal_samples(P.U, X, dk);
  o.dual = dual_samples(P.U, T.Y, P.kappa, c.convention);
  if (want_foc) o.foc = foc_errors(P.U, X, T.Y, P.kappa, c.convention);
  o.M = CheckpointPanel::sample(M, c.checkpoints);
  o.XR = CheckpointPanel::sample(XR, c.checkpoints);
  auto ow = owp_panels(X, T, c.checkpoints);
  o.owp_lhs = std::move(ow.lhs);
  o.owp_rhs = std::move(ow.rhs);
  o.xr_final.resize(r.count);
  for (std::size_t p = 0; p < r.count; ++p) o.xr_final[p] = XR(p, P.grid.steps());
  if (keep_samples) {
    o.X = X;
    o.Y = T.Y;
    o.Mb = M;
  }
  return o;
}

template <class T>
std::vector<T> concat_vec(const std::vector<BlockOut>& blocks, std::vector<T> BlockOut::*field) {
  std::vector<T> out;
  for (const auto& b : blocks) out.insert(out.end(), (b.*field).begin(), (b.*field).end());
  return out;
}

CheckpointPanel concat_panel(const std::vector<BlockOut>& blocks, CheckpointPanel BlockOut::*field) {
  std::vector<CheckpointPanel> parts;
  parts.reserve(blocks.size());
  for (const auto& b : blocks) parts.push_back(b.*field);
  return CheckpointPanel::concat(parts);
}

// Randomized admissible (θ, β, ψ): budget inequality on each candidate.
Verdict random_budget(const Plan& P, std::vector<std::pair<std::string, std::string>>& params) {
  const auto& c = P.cfg;
  // σθ within 0.4 of the market price of risk and |ψ| <= 0.4 keep X·Z log-variance moderate
  const double lam0 = P.bs ? c.lambda : 1.0;
  const double theta_lo = (lam0 - 0.4) / c.sigma, theta_hi = (lam0 + 0.4) / c.sigma;
  const double b_lo = P.beta_hat ? 0.5 * *P.beta_hat : 0.01;
  const double b_hi = P.beta_hat ? 5.0 * *P.beta_hat : 1.0;
  params.emplace_back("theta_range", "[" + num(theta_lo) + "," + num(theta_hi) + "]");
  params.emplace_back("beta_range", "[" + num(b_lo) + "," + num(b_hi) + "]");
  params.emplace_back("psi_range", "[-0.4,0.4]");
  params.emplace_back("candidate_paths", std::to_string(c.candidate_paths));

  const double xy = c.x * P.y;
  double worst = -std::numeric_limits<double>::infinity();
  std::string where, failed;
  bool ok = true;
  for (std::size_t k = 0; k < c.candidates; ++k) {
    const GaussianStream draw(c.seed, NoiseStream::Candidates, k);
    const double theta = theta_lo + (theta_hi - theta_lo) * draw.uniform(0);
    const double beta = b_lo * std::pow(b_hi / b_lo, draw.uniform(1));
    const double psi_v = 0.4 * (2.0 * draw.uniform(2) - 1.0);
    const auto seed_k = static_cast<std::uint64_t>(draw.uniform(3) * 9007199254740992.0);

    const auto strat = Strategy::constant(theta);
    const auto psi = PsiSpec::constant(psi_v);
    const auto bc = BetaControl::constant(beta);
    std::vector<std::vector<double>> parts(path_blocks(c.candidate_paths).size());
    for_each_block(c.candidate_paths, c.threads, [&](std::size_t b, PathRange r) {
      const auto mp = simulate_market(P.model, P.grid, r, seed_k, c.bessel_method, true);
      const auto Z = build_Z(psi, P.model, mp.W, &*mp.W_perp, mp.lambda, mp.B ? &*mp.B : nullptr);
      const auto X = simulate_wealth(P.model, strat, mp.W, mp.lambda, c.x);
      DeflatorSpec ds;
      ds.y = P.y;
      const auto T = build_triple(build_S(ds, &Z, P.grid, r), bc, P.kappa, c.convention, &mp.lambda);
      parts[b] = budget_samples(X, T);
    });
    std::vector<double> all;
    for (const auto& p : parts) all.insert(all.end(), p.begin(), p.end());
    const auto est = summarize(all);
    const auto v = budget_verdict(est, c.x, P.y, BudgetMode::Inequality);
    const double rel = (est.mean - xy) / xy;
    std::ostringstream os;
    os << "candidate " << k << " theta=" << theta << " beta=" << beta << " psi=" << psi_v
       << ": E budget=" << est.mean << " SE " << est.std_error << " vs xy=" << xy;
    if (!v.pass() && ok) failed = os.str();
    if (!v.pass()) ok = false;
    if (rel > worst) {
      worst = rel;
      where = os.str();
    }
  }
  return Verdict::from(ok, worst, 0.0, ok ? "closest " + where : "violated by " + failed, c.candidates);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg_in) {
  const Plan P = make_plan(cfg_in);
  const auto& c = P.cfg;
  ExperimentResult res;
  res.config = c;
  res.y = P.y;
  res.beta_hat = P.beta_hat;

  const double T_max = P.grid.t_max();
  const double xy = c.x * P.y;
  const double tmass = tail_mass(P.kappa, T_max);
  const bool want_foc = selected(c, "foc");

  const auto blocks_r = path_blocks(c.n_paths);
  std::vector<BlockOut> blocks(blocks_r.size());
  for_each_block(c.n_paths, c.threads, [&](std::size_t b, PathRange r) {
    blocks[b] = run_block(P, r, b == 0 && c.sample_paths > 0, want_foc);
  });
  res.sample_X = blocks[0].X;
  res.sample_Y = blocks[0].Y;
  res.sample_M = blocks[0].Mb;

  const auto budget = concat_vec(blocks, &BlockOut::budget);
  const auto primal = concat_vec(blocks, &BlockOut::primal);
  const auto dual = concat_vec(blocks, &BlockOut::dual);
  const auto foc = concat_vec(blocks, &BlockOut::foc);
  const auto xr_final = concat_vec(blocks, &BlockOut::xr_final);
  const auto M = concat_panel(blocks, &BlockOut::M);
  const auto XR = concat_panel(blocks, &BlockOut::XR);
  OwpPanels owp{concat_panel(blocks, &BlockOut::owp_lhs), concat_panel(blocks, &BlockOut::owp_rhs)};
  blocks.clear();

  const bool at_optimum = P.optimal_strategy && P.optimal_beta;
  const auto budget_est = summarize(budget, tmass);
  const auto primal_est = summarize(primal, tmass);
  const auto dual_est = summarize(dual, tmass);
  const auto xr_final_est = summarize(xr_final);

  // Budget beyond T_max: analytic at the closed-form optimum, otherwise E[X_T R_T],
  // which is exact whenever M is a true martingale.
  const double budget_tail = at_optimum ? bs_budget_tail(T_max, c.x, P.y, P.alpha, c.lambda, P.U) : xr_final_est.mean;
  const char* tail_source = at_optimum ? "analytic" : "sample E[X_T R_T]";

  const bool bs_closed = P.bs && c.has_closed_form();
  std::optional<double> u_oracle, v_oracle;
  double primal_tail = 0.0, dual_tail = 0.0;
  if (bs_closed) {
    u_oracle = bs_primal_value(c.x, P.alpha, c.lambda, P.U);
    primal_tail = bs_primal_tail(T_max, c.x, P.alpha, c.lambda, P.U);
    if (P.optimal_beta) {
      v_oracle = bs_dual_value(P.y, P.alpha, c.lambda, P.U);
      dual_tail = bs_dual_tail(T_max, P.y, P.alpha, c.lambda, P.U);
    } else if (c.convention == Convention::LebesgueForm && c.beta_value > 0.0) {
      v_oracle = bs_dual_objective(c.beta_value, P.y, P.alpha, c.lambda, P.U);
      dual_tail = bs_dual_objective_tail(c.beta_value, T_max, P.y, P.alpha, c.lambda, P.U);
    }
  }

  res.estimates.push_back({"budget", T_max, budget_est, budget_tail, xy});
  res.estimates.push_back({"primal", T_max, primal_est, primal_tail, u_oracle});
  res.estimates.push_back({"dual", T_max, dual_est, dual_tail, v_oracle});
  std::optional<DecayOracle> xr_oracle;
  if (at_optimum) {
    const double bh = *P.beta_hat;
    xr_oracle = [xy, bh](double t) { return xy * std::exp(-bh * t); };
  }
  for (std::size_t k = 0; k < c.checkpoints.size(); ++k) {
    const double t = c.checkpoints[k];
    std::optional<double> o;
    if (xr_oracle) o = (*xr_oracle)(t);
    res.estimates.push_back({"XR", t, summarize(XR.column(k)), 0.0, o});
    std::optional<double> mo;
    if (at_optimum) mo = xy;
    res.estimates.push_back({"M", t, summarize(M.column(k)), 0.0, mo});
  }
  res.estimates.push_back({"XR", T_max, xr_final_est, 0.0,
                           xr_oracle ? std::optional<double>((*xr_oracle)(T_max)) : std::nullopt});

  auto add = [&](const std::string& test, Verdict v, std::vector<std::pair<std::string, std::string>> params,
                 std::size_t n, double mass) {
    res.outcomes.push_back({test, std::move(params), std::move(v), n, mass});
  };

  for (const auto& test : known_tests()) {
    if (!selected(c, test)) continue;
    std::vector<std::pair<std::string, std::string>> params;
    if (test == "budget_saturation") {
      params = {{"x", num(c.x)}, {"y", num(P.y)}, {"tail_bound", num(budget_tail)}, {"tail_source", tail_source}};
      add(test, budget_verdict(budget_est, c.x, P.y, BudgetMode::Saturation, budget_tail), params, c.n_paths, tmass);
    } else if (test == "budget_inequality") {
      params = {{"x", num(c.x)}, {"y", num(P.y)}};
      add(test, budget_verdict(budget_est, c.x, P.y, BudgetMode::Inequality), params, c.n_paths, tmass);
    } else if (test == "primal") {
      if (!u_oracle) no_oracle(test, "u(x) is known for BS with exponential kappa");
      const double total = primal_est.mean + primal_tail;
      const double rel = std::abs(total - *u_oracle) / std::abs(*u_oracle);
      std::ostringstream os;
      os << "MC " << primal_est.mean << " + tail " << primal_tail << " vs u(x) " << *u_oracle << " (SE "
         << primal_est.std_error << ")";
      params = {{"x", num(c.x)}, {"u_oracle", num(*u_oracle)}, {"tail", num(primal_tail)}};
      add(test, Verdict::from(rel <= 0.02 && !primal_est.infinite, rel, 0.02, os.str()), params, c.n_paths,
          tmass);
    } else if (test == "dual") {
      if (!v_oracle) no_oracle(test, "the dual value is known for BS at beta_hat or at a constant beta (lebesgue)");
      const double dev = std::abs(dual_est.mean + dual_tail - *v_oracle);
      const double band = 3.0 * dual_est.std_error + kExactFloor * std::abs(*v_oracle);
      std::ostringstream os;
      os << "MC " << dual_est.mean << " + tail " << dual_tail << " vs " << *v_oracle << " (SE "
         << dual_est.std_error << ")";
      params = {{"y", num(P.y)}, {"v_oracle", num(*v_oracle)}, {"tail", num(dual_tail)}};
      add(test, Verdict::from(dev <= band && !dual_est.infinite, band > 0 ? dev / band : dev, 1.0, os.str()),
          params, c.n_paths, tmass);
    } else if (test == "weak_duality") {
      params = {{"x", num(c.x)}, {"y", num(P.y)}, {"horizon", "truncated at t_max"}};
      add(test, weak_duality_gap(primal_est, dual_est, c.x, P.y), params, c.n_paths, tmass);
    } else if (test == "martingale") {
      params = {{"process", "M"}};
      add(test, martingale_mean_test(M), params, c.n_paths, 0.0);
    } else if (test == "supermartingale") {
      params = {{"process", "M"}};
      add(test, supermartingale_mean_test(M), params, c.n_paths, 0.0);
    } else if (test == "potential") {
      params = {{"process", "XR"}, {"oracle", xr_oracle ? "x*y*exp(-beta_hat*t)" : "none"}};
      add(test, potential_test(XR, xr_oracle), params, c.n_paths, 0.0);
    } else if (test == "owp") {
      const bool pathwise = at_optimum && P.U.is_log() && P.psi.is_zero();
      params = {{"mode", pathwise ? "pathwise" : "aggregate"}, {"tail_bound", num(budget_tail)},
                {"tail_source", tail_source}};
      add(test,
          owp_representation_check(owp, pathwise ? OwpMode::Pathwise : OwpMode::Aggregate, budget_tail, 0.0,
                                   pathwise ? xr_oracle : std::nullopt),
          params, c.n_paths, tmass);
    } else if (test == "foc") {
      params = {{"tolerance", num(kFocTolerance)}};
      add(test, foc_check(foc), params, c.n_paths, 0.0);
    } else if (test == "random_budget") {
      auto v = random_budget(P, params);
      add(test, std::move(v), params, c.candidate_paths, tmass);
    } else if (test == "psi_zero" || test == "dual_profile") {
      if (!P.beta_hat || c.kappa != "exponential") no_oracle(test, "beta_hat needs exponential kappa");
      McDualSetup s;
      s.model = P.model;
      s.U = P.U;
      s.alpha = P.alpha;
      s.grid = P.grid;
      s.y = P.y;
      s.n_paths = c.n_paths;
      s.seed = c.seed;
      s.threads = c.threads;
      const double bh = *P.beta_hat;
      if (test == "psi_zero") {
        if (!P.U.is_log()) throw ConfigError("test 'psi_zero' is defined for log utility");
        const std::vector<double> psis = {-0.5, -0.25, 0.0, 0.25, 0.5};
        auto r = psi_zero_optimality_check(s, bh, psis);
        params = {{"beta", num(bh)}, {"psis", "[-0.5,-0.25,0,0.25,0.5]"}};
        add(test, r.verdict, params, c.n_paths, tmass);
      } else {
        std::vector<double> betas;
        for (int k = 0; k <= 10; ++k) betas.push_back(bh * (0.5 + 0.1 * k));
        const auto prof = mc_beta_profile(s, betas, bh, 0.5 * bh, 1.5 * bh);
        const double dev = std::abs(prof.beta_star_extrapolated - bh);
        const double band = 3.0 * prof.uncertainty + std::abs(prof.beta_star - prof.beta_star_coarse);
        std::ostringstream os;
        os << "beta*=" << prof.beta_star << " coarse=" << prof.beta_star_coarse
           << " extrapolated=" << prof.beta_star_extrapolated << " uncertainty=" << prof.uncertainty
           << " vs beta_hat=" << bh;
        params = {{"beta_hat", num(bh)}, {"beta_star", num(prof.beta_star_extrapolated)},
                  {"uncertainty", num(prof.uncertainty)}};
        add(test, Verdict::from(dev <= band, band > 0 ? dev / band : dev, 1.0, os.str(), betas.size()), params,
            c.n_paths, tmass);
      }
    }
  }
  return res;
}

}  // namespace deflab
