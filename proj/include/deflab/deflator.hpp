#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "deflab/discount.hpp"
#include "deflab/grid.hpp"
#include "deflab/market.hpp"

namespace deflab {

/// How dκ enters R and the budget/dual integrals.
///   KappaForm:    R = e^{-∫β dκ} S, budget ∫XY dκ, dual ∫V(Y) dκ.
///   LebesgueForm: R = e^{-∫β dt} S, budget ∫XY dt, dual ∫V(γY) dκ.
enum class Convention { KappaForm, LebesgueForm };

const char* to_string(Convention c);
Convention parse_convention(const std::string& s);

/// Auxiliary dual control β >= 0.
class BetaControl {
 public:
  using Feedback = std::function<double(double t, double lambda)>;

  static BetaControl constant(double beta);
  /// Piecewise constant through (t_i, β_i), right-continuous, constant after the last knot.
  static BetaControl tabulated(std::vector<double> t, std::vector<double> beta);
  static BetaControl feedback(Feedback f, std::string name);

  /// Throws ControlError for negative or non-finite values.
  double at(double t, double lambda) const;
  bool is_constant() const { return kind_ == Kind::Constant; }
  bool needs_state() const { return kind_ == Kind::Feedback; }
  double constant_value() const { return value_; }
  std::string describe() const { return name_; }

 private:
  enum class Kind { Constant, Tabulated, Feedback };
  Kind kind_ = Kind::Constant;
  double value_ = 0.0;
  std::vector<double> t_, b_;
  Feedback f_;
  std::string name_;
};

/// Integrand ψ on the orthogonal driver W⊥.
class PsiSpec {
 public:
  using Feedback = std::function<double(double t, double lambda)>;

  static PsiSpec zero() { return constant(0.0); }
  static PsiSpec constant(double psi);
  static PsiSpec feedback(Feedback f, std::string name);

  double at(double t, double lambda) const;
  bool is_constant() const { return !f_; }
  bool is_zero() const { return !f_ && value_ == 0.0; }
  double constant_value() const { return value_; }
  std::string describe() const { return name_; }

 private:
  double value_ = 0.0;
  Feedback f_;
  std::string name_;
};

enum class ZScheme {
  Exact,     // closed forms: E(-λW) = exp(-λW_t - λ²t/2) (BS), E(-λW) = 1/B (Bessel)
  Discrete,  // Itô sums of stochastic_exponential on the grid
};

/// Z = E(-λ·W - ψ·W⊥), Z_0 = 1. `W_perp` may be null when ψ ≡ 0. With ZScheme::Exact
/// the Bessel market needs `B`, and Z = E(-ψ·W⊥)/B.
PathBundle build_Z(const PsiSpec& psi, const MarketModel& model, const PathBundle& W, const PathBundle* W_perp,
                   const PathBundle& lambda, const PathBundle* B = nullptr, ZScheme scheme = ZScheme::Exact);

struct DeflatorSpec {
  enum class Base { LocalMartingale, UnitProcess, Explicit };

  Base base = Base::LocalMartingale;
  PsiSpec psi = PsiSpec::zero();
  std::optional<PathBundle> explicit_S;
  BetaControl beta = BetaControl::constant(0.0);
  double y = 1.0;
};

/// S = y·Z, S ≡ y, or the explicit bundle (which must start at y).
PathBundle build_S(const DeflatorSpec& spec, const PathBundle* Z, const TimeGrid& grid, PathRange range);

/// R_t = exp(-Σ_{i<t} β_iΔ_i)·S_t with Δ_i = Δκ_i (KappaForm) or Δt_i (LebesgueForm).
/// `lambda` is needed only for feedback controls.
PathBundle build_R(const PathBundle& S, const BetaControl& beta, const DiscountMeasure& kappa,
                   Convention conv = Convention::KappaForm, const PathBundle* lambda = nullptr);

/// Y_t = β_t R_t.
PathBundle build_Y(const PathBundle& R, const BetaControl& beta, const PathBundle* lambda = nullptr);

/// R, Y and the per-cell release weights ρ_i = R_i(1 - e^{-β_iΔ_i}), the exact mass
/// ∫ βR over cell i when β and S are frozen at its left node. The budget integral
/// and M use Σ X_iρ_i, which telescopes exactly against X R.
struct DeflatedTriple {
  PathBundle R;
  PathBundle Y;
  std::vector<double> release;  // n_paths x steps, row-major
  Convention convention;

  double rho(std::size_t path, std::size_t cell) const {
    return release[path * R.grid().steps() + cell];
  }
};

DeflatedTriple build_triple(const PathBundle& S, const BetaControl& beta, const DiscountMeasure& kappa,
                            Convention conv, const PathBundle* lambda = nullptr);

/// M_t = X_tR_t + Σ_{i<t} X_iρ_i.
PathBundle assemble_M(const PathBundle& X, const DeflatedTriple& T);

/// Elementwise product of two compatible bundles.
PathBundle multiply(const PathBundle& a, const PathBundle& b, std::string label = {});

}  // namespace deflab
