#include "deflab/deflator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "deflab/errors.hpp"

namespace deflab {

const char* to_string(Convention c) { return c == Convention::KappaForm ? "kappa" : "lebesgue"; }

Convention parse_convention(const std::string& s) {
  if (s == "kappa") return Convention::KappaForm;
  if (s == "lebesgue") return Convention::LebesgueForm;
  throw ConfigError("convention must be 'kappa' or 'lebesgue', got '" + s + "'");
}

BetaControl BetaControl::constant(double beta) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ControlError("beta must be finite and >= 0");
  BetaControl c;
  c.kind_ = Kind::Constant;
  c.value_ = beta;
  std::ostringstream os;
  os << "constant(" << beta << ")";
  c.name_ = os.str();
  return c;
}

BetaControl BetaControl::tabulated(std::vector<double> t, std::vector<double> beta) {
  if (t.empty() || t.size() != beta.size()) throw ControlError("beta table needs matching columns");
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i > 0 && !(t[i] > t[i - 1])) throw ControlError("beta table t must be strictly increasing");
    if (!(beta[i] >= 0.0) || !std::isfinite(beta[i])) throw ControlError("beta table values must be >= 0");
  }
  BetaControl c;
  c.kind_ = Kind::Tabulated;
  c.t_ = std::move(t);
  c.b_ = std::move(beta);
  c.name_ = "table(" + std::to_string(c.t_.size()) + ")";
  return c;
}

BetaControl BetaControl::feedback(Feedback f, std::string name) {
  if (!f) throw ControlError("empty feedback control");
  BetaControl c;
  c.kind_ = Kind::Feedback;
  c.f_ = std::move(f);
  c.name_ = std::move(name);
  return c;
}

double BetaControl::at(double t, double lambda) const {
  double b = value_;
  if (kind_ == Kind::Tabulated) {
    auto it = std::upper_bound(t_.begin(), t_.end(), t);
    b = it == t_.begin() ? b_.front() : b_[static_cast<std::size_t>(std::distance(t_.begin(), it)) - 1];
  } else if (kind_ == Kind::Feedback) {
    b = f_(t, lambda);
  }
  if (!(b >= 0.0) || !std::isfinite(b)) {
    std::ostringstream os;
    os << "beta control " << name_ << " gave " << b << " at t=" << t;
    throw ControlError(os.str());
  }
  return b;
}

PsiSpec PsiSpec::constant(double psi) {
  if (!std::isfinite(psi)) throw ControlError("psi must be finite");
  PsiSpec s;
  s.value_ = psi;
  std::ostringstream os;
  os << "constant(" << psi << ")";
  s.name_ = os.str();
  return s;
}

PsiSpec PsiSpec::feedback(Feedback f, std::string name) {
  if (!f) throw ControlError("empty psi feedback");
  PsiSpec s;
  s.f_ = std::move(f);
  s.name_ = std::move(name);
  return s;
}

double PsiSpec::at(double t, double lambda) const {
  const double v = f_ ? f_(t, lambda) : value_;
  if (!std::isfinite(v)) throw ControlError("psi " + name_ + " is not finite");
  return v;
}

namespace {

// log E(-ψ·W⊥) per node, accumulated into `logz`.
void add_log_orthogonal(const PsiSpec& psi, const PathBundle& W_perp, const PathBundle& lambda,
                        PathBundle& logz) {
  const auto& g = W_perp.grid();
  for (std::size_t p = 0; p < W_perp.n_paths(); ++p) {
    if (psi.is_constant()) {
      const double c = psi.constant_value();
      for (std::size_t i = 1; i < g.nodes(); ++i) logz(p, i) += -c * W_perp(p, i) - 0.5 * c * c * g.time(i);
    } else {
      double s = 0.0;
      for (std::size_t i = 0; i < g.steps(); ++i) {
        const double v = psi.at(g.time(i), lambda(p, i));
        s += -v * (W_perp(p, i + 1) - W_perp(p, i)) - 0.5 * v * v * g.dt(i);
        logz(p, i + 1) += s;
      }
    }
  }
}

}  // namespace

PathBundle build_Z(const PsiSpec& psi, const MarketModel& model, const PathBundle& W, const PathBundle* W_perp,
                   const PathBundle& lambda, const PathBundle* B, ZScheme scheme) {
  W.require_compatible(lambda, "build_Z");
  if (!psi.is_zero()) {
    if (!W_perp) throw StructuralError("build_Z: psi != 0 needs the orthogonal driver");
    W.require_compatible(*W_perp, "build_Z");
  }
  const auto& g = W.grid();
  PathBundle logz = PathBundle::filled(g, W.range(), 0.0);

  if (scheme == ZScheme::Exact && model.is_bessel()) {
    if (!B) throw StructuralError("build_Z: exact Bessel deflator needs B");
    B->require_compatible(W, "build_Z");
    for (std::size_t p = 0; p < W.n_paths(); ++p)
      for (std::size_t i = 0; i < g.nodes(); ++i) logz(p, i) = -std::log((*B)(p, i));
  } else if (scheme == ZScheme::Exact) {
    const double l = model.bs_lambda();
    for (std::size_t p = 0; p < W.n_paths(); ++p)
      for (std::size_t i = 1; i < g.nodes(); ++i) logz(p, i) = -l * W(p, i) - 0.5 * l * l * g.time(i);
  } else {
    for (std::size_t p = 0; p < W.n_paths(); ++p) {
      double s = 0.0;
      for (std::size_t i = 0; i < g.steps(); ++i) {
        const double l = lambda(p, i);
        s += -l * (W(p, i + 1) - W(p, i)) - 0.5 * l * l * g.dt(i);
        logz(p, i + 1) = s;
      }
    }
  }
  if (!psi.is_zero()) add_log_orthogonal(psi, *W_perp, lambda, logz);

  PathBundle Z(g, W.range(), "Z");
  for (std::size_t p = 0; p < W.n_paths(); ++p)
    for (std::size_t i = 0; i < g.nodes(); ++i) Z(p, i) = i == 0 ? 1.0 : std::exp(logz(p, i));
  return Z;
}

PathBundle build_S(const DeflatorSpec& spec, const PathBundle* Z, const TimeGrid& grid, PathRange range) {
  if (!(spec.y > 0.0) || !std::isfinite(spec.y)) throw DomainError("deflator needs y > 0");
  switch (spec.base) {
    case DeflatorSpec::Base::UnitProcess:
      return PathBundle::filled(grid, range, spec.y, "S");
    case DeflatorSpec::Base::Explicit: {
      if (!spec.explicit_S) throw StructuralError("explicit deflator without a bundle");
      const auto& S = *spec.explicit_S;
      for (std::size_t p = 0; p < S.n_paths(); ++p) {
        if (std::abs(S(p, 0) - spec.y) > 1e-12 * spec.y) throw StructuralError("explicit S must start at y");
        for (std::size_t i = 0; i < S.nodes(); ++i)
          if (!(S(p, i) > 0.0)) throw SimulationIntegrityError("explicit S must be positive");
      }
      return S;
    }
    case DeflatorSpec::Base::LocalMartingale:
      break;
  }
  if (!Z) throw StructuralError("local-martingale deflator needs Z");
  PathBundle S(Z->grid(), Z->range(), "S");
  for (std::size_t p = 0; p < Z->n_paths(); ++p)
    for (std::size_t i = 0; i < Z->nodes(); ++i) S(p, i) = spec.y * (*Z)(p, i);
  return S;
}

namespace {

std::vector<double> cell_measure(const DiscountMeasure& kappa, const TimeGrid& g, Convention conv) {
  if (conv == Convention::KappaForm) return kappa_increments(kappa, g);
  std::vector<double> d(g.steps());
  for (std::size_t i = 0; i < g.steps(); ++i) d[i] = g.dt(i);
  return d;
}

double lambda_at(const PathBundle* lambda, std::size_t p, std::size_t i) {
  return lambda ? (*lambda)(p, i) : 0.0;
}

void require_lambda(const BetaControl& beta, const PathBundle* lambda, const PathBundle& like) {
  if (lambda) lambda->require_compatible(like, "deflator");
  else if (beta.needs_state())
    throw StructuralError("feedback beta needs the market price of risk");
}

}  // namespace

DeflatedTriple build_triple(const PathBundle& S, const BetaControl& beta, const DiscountMeasure& kappa,
                            Convention conv, const PathBundle* lambda) {
  require_lambda(beta, lambda, S);
  const auto& g = S.grid();
  const auto d = cell_measure(kappa, g, conv);
  DeflatedTriple T{PathBundle(g, S.range(), "R"), PathBundle(g, S.range(), "Y"),
                   std::vector<double>(S.n_paths() * g.steps()), conv};
  std::vector<double> bt(g.nodes());
  const bool shared = !beta.needs_state();
  if (shared)
    for (std::size_t i = 0; i < g.nodes(); ++i) bt[i] = beta.at(g.time(i), 0.0);
  for (std::size_t p = 0; p < S.n_paths(); ++p) {
    if (!shared)
      for (std::size_t i = 0; i < g.nodes(); ++i) bt[i] = beta.at(g.time(i), lambda_at(lambda, p, i));
    double cum = 0.0;
    for (std::size_t i = 0; i < g.nodes(); ++i) {
      if (!(S(p, i) > 0.0)) throw SimulationIntegrityError("deflator S must be positive");
      const double r = std::exp(-cum) * S(p, i);
      T.R(p, i) = r;
      T.Y(p, i) = bt[i] * r;
      if (i < g.steps()) {
        const double a = bt[i] * d[i];
        T.release[p * g.steps() + i] = -r * std::expm1(-a);
        cum += a;
        if (!std::isfinite(cum)) throw ControlError("integral of beta is not finite");
      }
    }
  }
  return T;
}

PathBundle build_R(const PathBundle& S, const BetaControl& beta, const DiscountMeasure& kappa, Convention conv,
                   const PathBundle* lambda) {
  return build_triple(S, beta, kappa, conv, lambda).R;
}

PathBundle build_Y(const PathBundle& R, const BetaControl& beta, const PathBundle* lambda) {
  require_lambda(beta, lambda, R);
  const auto& g = R.grid();
  PathBundle Y(g, R.range(), "Y");
  for (std::size_t p = 0; p < R.n_paths(); ++p)
    for (std::size_t i = 0; i < g.nodes(); ++i) Y(p, i) = beta.at(g.time(i), lambda_at(lambda, p, i)) * R(p, i);
  return Y;
}

PathBundle assemble_M(const PathBundle& X, const DeflatedTriple& T) {
  X.require_compatible(T.R, "assemble_M");
  const auto& g = X.grid();
  PathBundle M(g, X.range(), "M");
  for (std::size_t p = 0; p < X.n_paths(); ++p) {
    double acc = 0.0;
    for (std::size_t i = 0; i < g.nodes(); ++i) {
      M(p, i) = X(p, i) * T.R(p, i) + acc;
      if (i < g.steps()) acc += X(p, i) * T.rho(p, i);
    }
  }
  return M;
}

PathBundle multiply(const PathBundle& a, const PathBundle& b, std::string label) {
  a.require_compatible(b, "multiply");
  PathBundle out(a.grid(), a.range(), std::move(label));
  for (std::size_t p = 0; p < a.n_paths(); ++p)
    for (std::size_t i = 0; i < a.nodes(); ++i) out(p, i) = a(p, i) * b(p, i);
  return out;
}

}  // namespace deflab
