#include "deflab/cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "deflab/closed_form.hpp"
#include "deflab/config.hpp"
#include "deflab/deflator.hpp"
#include "deflab/dual_opt.hpp"
#include "deflab/errors.hpp"
#include "deflab/experiment.hpp"
#include "deflab/market.hpp"
#include "deflab/parallel.hpp"
#include "deflab/preference.hpp"
#include "deflab/report.hpp"
#include "deflab/stats.hpp"

namespace deflab {

namespace {

struct UtilityOpts {
  double p = 0.5;
  bool log = false;

  void add(CLI::App* app) {
    app->add_option("--p", p, "power utility exponent, p < 1, p != 0");
    app->add_flag("--log", log, "logarithmic utility");
  }
  UtilitySpec spec() const { return log ? UtilitySpec::log() : UtilitySpec::power(p); }
};

struct RunOpts {
  std::string config;
  std::optional<unsigned> threads;
  std::optional<std::size_t> paths;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;

  void add(CLI::App* app, bool config_required) {
    auto* c = app->add_option("--config", config, "flat key = value experiment file");
    if (config_required) c->required();
    app->add_option("--threads", threads, "worker threads");
    app->add_option("--paths", paths, "number of Monte-Carlo paths");
    app->add_option("--seed", seed, "seed (overrides DEFLATOR_LAB_SEED and the config)");
    app->add_option("--out", out, "output directory");
  }

  ExperimentConfig load() const {
    auto c = load_config(config);
    if (threads) c.threads = *threads;
    if (paths) c.n_paths = *paths;
    if (out) c.out_dir = *out;
    c.seed = resolve_seed(c.seed, seed);
    return c;
  }
};

int finish_run(ExperimentConfig c, const std::vector<std::string>& tests, std::ostream& out) {
  if (!tests.empty()) c.tests = tests;
  const auto r = run_experiment(c);
  write_outputs(r, c.out_dir);
  write_report_text(r, out);
  out << "outputs in " << c.out_dir << "\n";
  return r.all_pass() ? kExitPass : kExitFail;
}

int conjugate_check(const UtilityOpts& u, std::size_t points, std::ostream& out) {
  const auto U = u.spec();
  double worst = 0.0, at = 0.0;
  for (std::size_t i = 0; i < points; ++i) {
    const double x = std::pow(10.0, -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(points - 1));
    const double r = std::abs(fenchel_gap(U, x, marginal(U, x)));
    if (r > worst) {
      worst = r;
      at = x;
    }
  }
  out << std::setprecision(6) << U.describe() << ": max Fenchel residual " << worst << " over " << points
      << " points in [0.1, 10] (worst at x=" << at << ")\n";
  return worst < 1e-12 ? kExitPass : kExitFail;
}

struct SimulateOpts {
  std::string model = "bs";
  double lambda = 0.4, sigma = 0.2, t_max = 1.0;
  std::size_t steps = 1000, paths = 10000, sample = 20, stride = 10;
  std::string method = "norm3d";
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
  std::string out;
};

int simulate(const SimulateOpts& o, std::ostream& out) {
  const auto model = o.model == "bessel3" ? MarketModel::bessel3(VolSpec::constant(o.sigma))
                                          : MarketModel::black_scholes(o.lambda, o.sigma);
  if (o.model != "bs" && o.model != "bessel3") throw ConfigError("--model must be bs or bessel3");
  if (o.method != "norm3d" && o.method != "euler") throw ConfigError("--method must be norm3d or euler");
  const auto method = o.method == "euler" ? BesselMethod::Euler : BesselMethod::Norm3d;
  const std::uint64_t seed = resolve_seed(1, o.seed);
  const TimeGrid grid(o.t_max, o.steps);
  const auto blocks = path_blocks(o.paths);
  std::vector<std::vector<double>> zt(blocks.size());
  std::vector<std::size_t> clamps(blocks.size());
  std::optional<PathBundle> W0, B0, Z0;
  for_each_block(o.paths, o.threads, [&](std::size_t b, PathRange r) {
    const auto mp = simulate_market(model, grid, r, seed, method);
    const auto Z = build_Z(PsiSpec::zero(), model, mp.W, nullptr, mp.lambda, mp.B ? &*mp.B : nullptr);
    clamps[b] = mp.clamp_count;
    for (std::size_t p = 0; p < r.count; ++p) zt[b].push_back(Z(p, grid.steps()));
    if (b == 0) {
      W0 = mp.W;
      B0 = mp.B;
      Z0 = Z;
    }
  });
  std::vector<double> all;
  std::size_t clamp_total = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    all.insert(all.end(), zt[b].begin(), zt[b].end());
    clamp_total += clamps[b];
  }
  const auto e = summarize(all);
  out << std::setprecision(8) << model.describe() << ", T=" << o.t_max << ", N=" << o.steps << ", paths=" << o.paths
      << ", seed=" << seed << "\n";
  out << "E[Z_T] = " << e.mean << " +- " << e.std_error;
  if (model.is_bessel())
    out << "  (E[1/B_T] = " << bessel_reciprocal_mean(o.t_max) << ", clamped nodes " << clamp_total << ")";
  else
    out << "  (true martingale: 1)";
  out << "\n";
  if (!o.out.empty()) {
    std::filesystem::create_directories(o.out);
    auto dump = [&](const std::optional<PathBundle>& b, const char* name) {
      if (!b) return;
      std::ofstream f(std::filesystem::path(o.out) / name, std::ios::binary);
      b->write_csv(f, o.stride, o.sample);
    };
    dump(W0, "paths_W.csv");
    dump(B0, "paths_B.csv");
    dump(Z0, "paths_Z.csv");
    out << "sample paths in " << o.out << "\n";
  }
  return kExitPass;
}

struct DualOptOpts {
  std::string mode = "closed";
  std::string model = "bs";
  double alpha = 0.1, lambda = 0.4, y = 1.0, t_max = 100.0;
  std::size_t steps = 2000, paths = 100000;
  std::optional<double> lo, hi;
  std::optional<std::uint64_t> seed;
  unsigned threads = 1;
};

int dual_opt(const DualOptOpts& o, const UtilitySpec& U, std::ostream& out) {
  out << std::setprecision(8);
  if (o.mode == "closed") {
    if (o.model != "bs") throw ConfigError("closed mode needs --model bs");
    const double bh = bs_beta_hat(o.alpha, o.lambda, U);
    ScalarMinProblem prob;
    prob.objective = [&](double b) { return bs_dual_objective(b, o.y, o.alpha, o.lambda, U); };
    prob.lo = o.lo.value_or(1e-4);
    prob.hi = o.hi.value_or(std::max(1.0, 10.0 * bh));
    const auto r = minimize_constant_beta(prob);
    out << "beta* = " << r.beta << "  (closed form beta_hat = " << bh << ")\n";
    out << "v(y) = " << r.value << " at y=" << o.y << "  (closed form " << bs_dual_value(o.y, o.alpha, o.lambda, U)
        << "), evaluations " << r.evaluations << ", retries " << r.retries << "\n";
    return kExitPass;
  }
  if (o.mode != "mc") throw ConfigError("--mode must be closed or mc");
  McDualSetup s;
  s.model = o.model == "bessel3" ? MarketModel::bessel3(VolSpec::constant(0.2)) : MarketModel::black_scholes(o.lambda, 0.2);
  s.U = U;
  s.alpha = o.alpha;
  s.grid = TimeGrid(o.t_max, o.steps);
  s.y = o.y;
  s.n_paths = o.paths;
  s.seed = resolve_seed(1, o.seed);
  s.threads = o.threads;
  std::optional<double> bh;
  if (U.is_log() || o.model == "bs") bh = bs_beta_hat(o.alpha, o.lambda, U);
  const double lo = o.lo.value_or(bh ? 0.5 * *bh : 0.01);
  const double hi = o.hi.value_or(bh ? 1.5 * *bh : 1.0);
  std::vector<double> betas;
  for (int k = 0; k <= 10; ++k) betas.push_back(lo * std::pow(hi / lo, k / 10.0));
  const auto prof = mc_beta_profile(s, betas, bh.value_or(std::sqrt(lo * hi)), lo, hi);
  out << "beta* = " << prof.beta_star_extrapolated << " +- " << prof.uncertainty << "  (fine grid " << prof.beta_star
      << ", coarse grid " << prof.beta_star_coarse << ", " << prof.n_paths << " paths, seed " << prof.seed << ")\n";
  if (bh) out << "closed form beta_hat = " << *bh << "\n";
  for (std::size_t k = 0; k < betas.size(); ++k)
    out << "  beta " << betas[k] << "  objective " << prof.values[k].mean << " +- " << prof.values[k].std_error
        << "\n";
  return kExitPass;
}

struct ClosedFormOpts {
  double alpha = 0.1, lambda = 0.4, sigma = 0.2, x = 1.0, y = 1.0;
};

int closed_form(const ClosedFormOpts& o, const UtilitySpec& U, std::ostream& out) {
  const double bh = bs_beta_hat(o.alpha, o.lambda, U);
  out << std::setprecision(10);
  out << "beta_hat=" << bh << "\n";
  out << "theta_hat=" << merton_fraction(o.lambda, o.sigma, U) << "\n";
  out << "v(" << o.y << ")=" << bs_dual_value(o.y, o.alpha, o.lambda, U) << "\n";
  out << "u(" << o.x << ")=" << bs_primal_value(o.x, o.alpha, o.lambda, U) << "\n";
  out << "u'(" << o.x << ")=" << bs_primal_marginal(o.x, o.alpha, o.lambda, U) << "\n";
  return kExitPass;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Monte-Carlo verification of wealth-path duality for inter-temporal utility", "deflab"};
  app.require_subcommand(1);

  UtilityOpts cc_u;
  std::size_t cc_points = 50;
  auto* cc = app.add_subcommand("conjugate-check", "max |V(U'(x)) - U(x) + xU'(x)| over a grid");
  cc_u.add(cc);
  cc->add_option("--points", cc_points, "grid size")->check(CLI::Range(2, 100000));

  SimulateOpts so;
  auto* sim = app.add_subcommand("simulate", "simulate market drivers and the minimal deflator");
  sim->add_option("--model", so.model, "bs | bessel3");
  sim->add_option("--lambda", so.lambda);
  sim->add_option("--sigma", so.sigma);
  sim->add_option("--t-max", so.t_max);
  sim->add_option("--steps", so.steps);
  sim->add_option("--paths", so.paths);
  sim->add_option("--method", so.method, "norm3d | euler (Bessel)");
  sim->add_option("--seed", so.seed);
  sim->add_option("--threads", so.threads);
  sim->add_option("--sample-paths", so.sample);
  sim->add_option("--stride", so.stride);
  sim->add_option("--out", so.out);

  RunOpts vb_o, vd_o, run_o;
  auto* vb = app.add_subcommand("verify-budget", "budget saturation, inequality and randomized candidates");
  vb_o.add(vb, true);
  auto* vd = app.add_subcommand("verify-duality", "primal, dual, weak duality and first-order conditions");
  vd_o.add(vd, true);
  auto* run = app.add_subcommand("run", "run every test selected in a config");
  run_o.add(run, true);

  DualOptOpts dopt;
  UtilityOpts d_u;
  auto* dop = app.add_subcommand("dual-opt", "minimize the dual objective over constant beta");
  dop->add_option("--mode", dopt.mode, "closed | mc");
  dop->add_option("--model", dopt.model, "bs | bessel3");
  dop->add_option("--alpha", dopt.alpha);
  dop->add_option("--lambda", dopt.lambda);
  dop->add_option("--y", dopt.y);
  dop->add_option("--t-max", dopt.t_max);
  dop->add_option("--steps", dopt.steps);
  dop->add_option("--paths", dopt.paths);
  dop->add_option("--beta-lo", dopt.lo);
  dop->add_option("--beta-hi", dopt.hi);
  dop->add_option("--seed", dopt.seed);
  dop->add_option("--threads", dopt.threads);
  d_u.add(dop);

  ClosedFormOpts cfo;
  UtilityOpts cf_u;
  auto* cf = app.add_subcommand("closed-form", "Black-Scholes closed forms");
  cf->add_option("--alpha", cfo.alpha);
  cf->add_option("--lambda", cfo.lambda);
  cf->add_option("--sigma", cfo.sigma);
  cf->add_option("--x", cfo.x);
  cf->add_option("--y", cfo.y);
  cf_u.add(cf);

  std::vector<std::string> dirs;
  auto* rep = app.add_subcommand("report", "summary table of earlier runs");
  rep->add_option("dirs", dirs, "run output directories")->required();

  if (argc > 1 && argv[1][0] != '-') {
    bool known = false;
    for (const auto* sub : app.get_subcommands({})) known = known || sub->get_name() == argv[1];
    if (!known) {
      err << "unknown subcommand '" << argv[1] << "'\n" << app.help();
      return kExitError;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return kExitError;
  }

  try {
    if (*cc) return conjugate_check(cc_u, cc_points, out);
    if (*sim) return simulate(so, out);
    if (*vb) return finish_run(vb_o.load(), {"budget_saturation", "budget_inequality", "random_budget"}, out);
    if (*vd) return finish_run(vd_o.load(), {"primal", "dual", "weak_duality", "foc"}, out);
    if (*run) return finish_run(run_o.load(), {}, out);
    if (*dop) return dual_opt(dopt, d_u.spec(), out);
    if (*cf) return closed_form(cfo, cf_u.spec(), out);
    if (*rep) return print_summary_table(read_verdicts(dirs), out) == 0 ? kExitPass : kExitFail;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  err << app.help();
  return kExitError;
}

}  // namespace deflab
