#include "deflab/market.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "deflab/errors.hpp"

namespace deflab {

VolSpec VolSpec::constant(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw DomainError("volatility must be positive and finite");
  return VolSpec({0.0}, {sigma});
}

VolSpec VolSpec::tabulated(std::vector<double> t, std::vector<double> sigma) {
  if (t.empty() || t.size() != sigma.size()) throw DomainError("volatility table needs matching (t, sigma) columns");
  if (t.front() != 0.0) throw DomainError("volatility table must start at t = 0");
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i > 0 && !(t[i] > t[i - 1])) throw DomainError("volatility table t must be strictly increasing");
    if (!(sigma[i] > 0.0) || !std::isfinite(sigma[i])) throw DomainError("volatility must be positive and finite");
  }
  return VolSpec(std::move(t), std::move(sigma));
}

double VolSpec::at(double t) const {
  auto it = std::upper_bound(t_.begin(), t_.end(), t);
  if (it == t_.begin()) return s_.front();
  return s_[static_cast<std::size_t>(std::distance(t_.begin(), it)) - 1];
}

std::string VolSpec::describe() const {
  std::ostringstream os;
  if (is_constant())
    os << s_.front();
  else
    os << "table(" << t_.size() << ")";
  return os.str();
}

MarketModel MarketModel::black_scholes(double lambda, double sigma) {
  return black_scholes(lambda, VolSpec::constant(sigma));
}

MarketModel MarketModel::black_scholes(double lambda, VolSpec sigma) {
  if (!std::isfinite(lambda)) throw DomainError("market price of risk must be finite");
  return MarketModel(BlackScholes{lambda, std::move(sigma)});
}

MarketModel MarketModel::bessel3(VolSpec sigma) { return MarketModel(Bessel3Market{std::move(sigma)}); }

double MarketModel::bs_lambda() const {
  if (const auto* bs = std::get_if<BlackScholes>(&v_)) return bs->lambda;
  throw UnsupportedError("the Bessel market has a stochastic market price of risk");
}

double MarketModel::sigma_at(double t) const {
  return std::visit([t](const auto& m) { return m.sigma.at(t); }, v_);
}

std::string MarketModel::describe() const {
  std::ostringstream os;
  if (const auto* bs = std::get_if<BlackScholes>(&v_))
    os << "black_scholes(lambda=" << bs->lambda << ",sigma=" << bs->sigma.describe() << ")";
  else
    os << "bessel3(sigma=" << std::get<Bessel3Market>(v_).sigma.describe() << ")";
  return os.str();
}

Strategy Strategy::constant(double theta) {
  if (!std::isfinite(theta)) throw StrategyError("strategy fraction must be finite");
  std::ostringstream os;
  os << "constant(" << theta << ")";
  return Strategy(theta, {}, os.str());
}

Strategy Strategy::feedback(Feedback f, std::string name) {
  if (!f) throw StrategyError("empty feedback strategy");
  return Strategy(0.0, std::move(f), std::move(name));
}

double Strategy::at(double t, double lambda) const {
  const double th = f_ ? f_(t, lambda) : theta_;
  if (!std::isfinite(th)) {
    std::ostringstream os;
    os << "strategy " << name_ << " is not finite at t=" << t << ", lambda=" << lambda;
    throw StrategyError(os.str());
  }
  return th;
}

PathBundle simulate_driver(const TimeGrid& grid, PathRange range, std::uint64_t seed, NoiseStream stream) {
  PathBundle W(grid, range, stream == NoiseStream::WPerp ? "W_perp" : "W");
  std::vector<double> z(grid.steps());
  std::vector<double> sq(grid.steps());
  for (std::size_t i = 0; i < grid.steps(); ++i) sq[i] = std::sqrt(grid.dt(i));
  for (std::size_t p = 0; p < range.count; ++p) {
    GaussianStream(seed, stream, range.first + p).fill(z);
    auto row = W.path(p);
    row[0] = 0.0;
    for (std::size_t i = 0; i < grid.steps(); ++i) row[i + 1] = row[i] + sq[i] * z[i];
  }
  return W;
}

BrownianPair simulate_brownian(const TimeGrid& grid, PathRange range, std::uint64_t seed) {
  return {simulate_driver(grid, range, seed, NoiseStream::W),
          simulate_driver(grid, range, seed, NoiseStream::WPerp)};
}

double Bessel3Paths::clamp_rate() const {
  const double cells = static_cast<double>(B.n_paths()) * static_cast<double>(B.grid().steps());
  return cells > 0 ? static_cast<double>(clamp_count) / cells : 0.0;
}

namespace {

Bessel3Paths bessel_norm3d(const TimeGrid& grid, PathRange range, std::uint64_t seed) {
  Bessel3Paths out{PathBundle(grid, range, "B"), PathBundle(grid, range, "W"), 0};
  auto& W = *out.W;
  const std::size_t n = grid.steps();
  std::vector<double> z(3 * n);
  for (std::size_t p = 0; p < range.count; ++p) {
    GaussianStream(seed, NoiseStream::Bessel3D, range.first + p).fill(z);
    double v0 = 1.0, v1 = 0.0, v2 = 0.0;
    auto b = out.B.path(p);
    auto w = W.path(p);
    b[0] = 1.0;
    w[0] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = std::sqrt(grid.dt(i));
      const double d0 = s * z[3 * i], d1 = s * z[3 * i + 1], d2 = s * z[3 * i + 2];
      w[i + 1] = w[i] + (v0 * d0 + v1 * d1 + v2 * d2) / b[i];
      v0 += d0;
      v1 += d1;
      v2 += d2;
      b[i + 1] = std::sqrt(v0 * v0 + v1 * v1 + v2 * v2);
    }
  }
  return out;
}

}  // namespace

Bessel3Paths bessel3_euler_from(const PathBundle& W) {
  const auto& grid = W.grid();
  Bessel3Paths out{PathBundle(grid, W.range(), "B"), std::nullopt, 0};
  for (std::size_t p = 0; p < W.n_paths(); ++p) {
    auto b = out.B.path(p);
    auto w = W.path(p);
    b[0] = 1.0;
    for (std::size_t i = 0; i < grid.steps(); ++i) {
      double next = b[i] + grid.dt(i) / b[i] + (w[i + 1] - w[i]);
      if (next < Bessel3Paths::kClampFloor) {
        next = Bessel3Paths::kClampFloor;
        ++out.clamp_count;
      }
      b[i + 1] = next;
    }
  }
  out.W = W;
  return out;
}

Bessel3Paths simulate_bessel3(const TimeGrid& grid, PathRange range, std::uint64_t seed, BesselMethod method) {
  if (method == BesselMethod::Norm3d) return bessel_norm3d(grid, range, seed);
  return bessel3_euler_from(simulate_driver(grid, range, seed, NoiseStream::W));
}

PathBundle coarsen(const PathBundle& b, std::size_t factor) {
  const TimeGrid g = b.grid().coarsened(factor);
  PathBundle out(g, b.range(), b.label());
  for (std::size_t p = 0; p < b.n_paths(); ++p)
    for (std::size_t i = 0; i < g.nodes(); ++i) out(p, i) = b(p, i * factor);
  return out;
}

PathBundle mpr_path(const PathBundle& B) {
  PathBundle lam(B.grid(), B.range(), "lambda");
  for (std::size_t p = 0; p < B.n_paths(); ++p)
    for (std::size_t i = 0; i < B.nodes(); ++i) {
      const double b = B(p, i);
      if (!(b > 0.0) || !std::isfinite(b)) {
        std::ostringstream os;
        os << "Bessel path " << B.range().first + p << " has non-positive value " << b << " at node " << i;
        throw SimulationIntegrityError(os.str());
      }
      lam(p, i) = 1.0 / b;
    }
  return lam;
}

PathBundle mpr_for(const MarketModel& model, const PathBundle& like, const std::optional<PathBundle>& B) {
  if (model.is_bessel()) {
    if (!B) throw StructuralError("Bessel market needs a simulated B to form lambda");
    B->require_compatible(like, "mpr_for");
    return mpr_path(*B);
  }
  return PathBundle::filled(like.grid(), like.range(), model.bs_lambda(), "lambda");
}

MarketPaths simulate_market(const MarketModel& model, const TimeGrid& grid, PathRange range, std::uint64_t seed,
                            BesselMethod method, bool with_perp) {
  std::optional<PathBundle> W_perp;
  if (with_perp) W_perp = simulate_driver(grid, range, seed, NoiseStream::WPerp);
  if (model.is_bessel()) {
    auto bes = simulate_bessel3(grid, range, seed, method);
    if (!bes.valid()) {
      std::ostringstream os;
      os << "Bessel Euler clamp rate " << bes.clamp_rate() << " exceeds " << Bessel3Paths::kMaxClampRate;
      throw SimulationIntegrityError(os.str());
    }
    auto lam = mpr_path(bes.B);
    return {std::move(*bes.W), std::move(W_perp), std::move(bes.B), std::move(lam), bes.clamp_count};
  }
  auto W = simulate_driver(grid, range, seed, NoiseStream::W);
  auto lam = PathBundle::filled(grid, range, model.bs_lambda(), "lambda");
  return {std::move(W), std::move(W_perp), std::nullopt, std::move(lam), 0};
}

PathBundle simulate_wealth(const MarketModel& model, const Strategy& strat, const PathBundle& W,
                           const PathBundle& lambda, double x) {
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("initial wealth must be positive");
  W.require_compatible(lambda, "simulate_wealth");
  const auto& grid = W.grid();
  PathBundle X(grid, W.range(), "X");
  std::vector<double> sig(grid.steps());
  for (std::size_t i = 0; i < grid.steps(); ++i) sig[i] = model.sigma_at(grid.time(i));
  for (std::size_t p = 0; p < W.n_paths(); ++p) {
    auto xp = X.path(p);
    auto wp = W.path(p);
    auto lp = lambda.path(p);
    xp[0] = x;
    double logx = std::log(x);
    for (std::size_t i = 0; i < grid.steps(); ++i) {
      const double st = sig[i] * strat.at(grid.time(i), lp[i]);
      logx += (st * lp[i] - 0.5 * st * st) * grid.dt(i) + st * (wp[i + 1] - wp[i]);
      xp[i + 1] = st == 0.0 ? xp[i] : std::exp(logx);
    }
  }
  return X;
}

PathBundle stochastic_exponential(const PathBundle& a, const PathBundle& b, const PathBundle& W,
                                  const PathBundle& W_perp) {
  a.require_compatible(W, "stochastic_exponential");
  b.require_compatible(W_perp, "stochastic_exponential");
  W.require_compatible(W_perp, "stochastic_exponential");
  const auto& grid = W.grid();
  PathBundle E(grid, W.range(), "E");
  for (std::size_t p = 0; p < W.n_paths(); ++p) {
    double s = 0.0;
    E(p, 0) = 1.0;
    for (std::size_t i = 0; i < grid.steps(); ++i) {
      const double ai = a(p, i), bi = b(p, i);
      s += ai * (W(p, i + 1) - W(p, i)) + bi * (W_perp(p, i + 1) - W_perp(p, i)) -
           0.5 * (ai * ai + bi * bi) * grid.dt(i);
      E(p, i + 1) = std::exp(s);
    }
  }
  return E;
}

PathBundle stochastic_exponential(const PathBundle& a, const PathBundle& W) {
  a.require_compatible(W, "stochastic_exponential");
  const auto& grid = W.grid();
  PathBundle E(grid, W.range(), "E");
  for (std::size_t p = 0; p < W.n_paths(); ++p) {
    double s = 0.0;
    E(p, 0) = 1.0;
    for (std::size_t i = 0; i < grid.steps(); ++i) {
      const double ai = a(p, i);
      s += ai * (W(p, i + 1) - W(p, i)) - 0.5 * ai * ai * grid.dt(i);
      E(p, i + 1) = std::exp(s);
    }
  }
  return E;
}

PathBundle stochastic_exponential(double a, const PathBundle& W) {
  // closed form in W_t keeps constant-coefficient exponentials free of summation drift
  const auto& grid = W.grid();
  PathBundle E(grid, W.range(), "E");
  for (std::size_t p = 0; p < W.n_paths(); ++p)
    for (std::size_t i = 0; i < grid.nodes(); ++i)
      E(p, i) = i == 0 ? 1.0 : std::exp(a * W(p, i) - 0.5 * a * a * grid.time(i));
  return E;
}

}  // namespace deflab
