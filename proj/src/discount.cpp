#include "deflab/discount.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "deflab/errors.hpp"

namespace deflab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void require_rate(double r, const char* what) {
  if (!(r > 0.0) || !std::isfinite(r)) {
    std::ostringstream os;
    os << what << " must be positive and finite, got " << r;
    throw DegenerateMeasureError(os.str());
  }
}

// Segment k with t[k] <= t < t[k+1]; t must lie inside the table.
std::size_t segment_of(const Tabulated& tab, double t) {
  auto it = std::upper_bound(tab.t.begin(), tab.t.end(), t);
  return static_cast<std::size_t>(std::distance(tab.t.begin(), it)) - 1;
}

}  // namespace

DiscountMeasure DiscountMeasure::exponential(double alpha) {
  require_rate(alpha, "discount rate alpha");
  return DiscountMeasure(ExponentialRate{alpha});
}

DiscountMeasure DiscountMeasure::random_horizon(double hazard) {
  require_rate(hazard, "horizon hazard rate");
  return DiscountMeasure(RandomHorizonRate{hazard});
}

DiscountMeasure DiscountMeasure::stopping(double horizon) {
  if (!(horizon > 0.0) || !std::isfinite(horizon))
    throw DegenerateMeasureError("stopping horizon must be positive so that kappa(0) = 0");
  return DiscountMeasure(StoppingIndicator{horizon});
}

DiscountMeasure DiscountMeasure::tabulated(std::vector<double> t, std::vector<double> kappa) {
  if (t.size() != kappa.size() || t.size() < 2)
    throw DegenerateMeasureError("tabulated kappa needs at least two (t, kappa) pairs");
  if (t.front() != 0.0 || kappa.front() != 0.0)
    throw DegenerateMeasureError("tabulated kappa must start at (0, 0)");
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (!(t[i] > t[i - 1])) throw DegenerateMeasureError("tabulated t must be strictly increasing");
    if (!(kappa[i] >= kappa[i - 1]) || !std::isfinite(kappa[i]))
      throw DegenerateMeasureError("tabulated kappa must be finite and non-decreasing");
  }
  if (!(kappa.back() > 0.0)) throw DegenerateMeasureError("tabulated kappa has zero total mass");
  return DiscountMeasure(Tabulated{std::move(t), std::move(kappa)});
}

DiscountMeasure DiscountMeasure::read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DegenerateMeasureError("kappa CSV is empty");
  {
    // header row is mandatory; reject a first row that parses as numbers
    std::istringstream hs(line);
    double probe;
    if (hs >> probe) throw DegenerateMeasureError("kappa CSV needs a header row (t,kappa)");
  }
  std::vector<double> t, k;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double a, b;
    if (!(ls >> a >> b)) {
      std::ostringstream os;
      os << "kappa CSV line " << lineno << " is not two numbers";
      throw DegenerateMeasureError(os.str());
    }
    t.push_back(a);
    k.push_back(b);
  }
  return tabulated(std::move(t), std::move(k));
}

DiscountMeasure DiscountMeasure::load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DegenerateMeasureError("cannot open kappa CSV " + path);
  return read_csv(in);
}

bool DiscountMeasure::has_density() const {
  return std::visit(overloaded{
                        [](const ExponentialRate&) { return true; },
                        [](const RandomHorizonRate&) { return true; },
                        [](const StoppingIndicator&) { return false; },
                        [](const Tabulated& tab) {
                          for (std::size_t i = 1; i < tab.t.size(); ++i)
                            if (!(tab.kappa[i] > tab.kappa[i - 1])) return false;
                          return true;
                        },
                    },
                    v_);
}

std::string DiscountMeasure::describe() const {
  std::ostringstream os;
  std::visit(overloaded{
                 [&](const ExponentialRate& e) { os << "exponential(alpha=" << e.alpha << ")"; },
                 [&](const RandomHorizonRate& r) { os << "random_horizon(hazard=" << r.hazard << ")"; },
                 [&](const StoppingIndicator& s) { os << "stopping(T=" << s.horizon << ")"; },
                 [&](const Tabulated& tab) { os << "tabulated(" << tab.t.size() << " knots)"; },
             },
             v_);
  return os.str();
}

double kappa_at(const DiscountMeasure& m, double t) {
  if (!(t >= 0.0)) throw DomainError("kappa_at needs t >= 0");
  return std::visit(overloaded{
                        [t](const ExponentialRate& e) { return -std::expm1(-e.alpha * t) / e.alpha; },
                        [t](const RandomHorizonRate& r) { return -std::expm1(-r.hazard * t); },
                        [t](const StoppingIndicator& s) { return t >= s.horizon ? 1.0 : 0.0; },
                        [t](const Tabulated& tab) {
                          if (t >= tab.t.back()) return tab.kappa.back();
                          const auto k = segment_of(tab, t);
                          const double w = (t - tab.t[k]) / (tab.t[k + 1] - tab.t[k]);
                          return tab.kappa[k] + w * (tab.kappa[k + 1] - tab.kappa[k]);
                        },
                    },
                    m.variant());
}

std::vector<double> kappa_increments(const DiscountMeasure& m, const TimeGrid& grid) {
  std::vector<double> out(grid.steps());
  double prev = kappa_at(m, 0.0);
  for (std::size_t i = 0; i < grid.steps(); ++i) {
    const double next = kappa_at(m, grid.time(i + 1));
    out[i] = next - prev;
    prev = next;
  }
  return out;
}

double gamma_at(const DiscountMeasure& m, double t) {
  if (!(t >= 0.0)) throw DomainError("gamma_at needs t >= 0");
  return std::visit(
      overloaded{
          [t](const ExponentialRate& e) { return std::exp(e.alpha * t); },
          [t](const RandomHorizonRate& r) { return std::exp(r.hazard * t) / r.hazard; },
          [](const StoppingIndicator&) -> double {
            throw UnsupportedError("stopping-indicator kappa has no Lebesgue density");
          },
          [t](const Tabulated& tab) -> double {
            if (t >= tab.t.back()) throw UnsupportedError("tabulated kappa has zero density past its last knot");
            const auto k = segment_of(tab, t);
            const double slope = (tab.kappa[k + 1] - tab.kappa[k]) / (tab.t[k + 1] - tab.t[k]);
            if (!(slope > 0.0)) throw UnsupportedError("tabulated kappa is flat here, gamma undefined");
            return 1.0 / slope;
          },
      },
      m.variant());
}

double total_mass(const DiscountMeasure& m) {
  return std::visit(overloaded{
                        [](const ExponentialRate& e) { return 1.0 / e.alpha; },
                        [](const RandomHorizonRate&) { return 1.0; },
                        [](const StoppingIndicator&) { return 1.0; },
                        [](const Tabulated& tab) { return tab.kappa.back(); },
                    },
                    m.variant());
}

double tail_mass(const DiscountMeasure& m, double t) {
  // closed forms avoid cancellation in κ_∞ - κ(t) for large t
  return std::visit(overloaded{
                        [t](const ExponentialRate& e) { return std::exp(-e.alpha * t) / e.alpha; },
                        [t](const RandomHorizonRate& r) { return std::exp(-r.hazard * t); },
                        [&m, t](const auto&) { return total_mass(m) - kappa_at(m, t); },
                    },
                    m.variant());
}

DiscountMeasure collapse_random_horizon(double alpha, double hazard) {
  if (!(alpha >= 0.0) || !(hazard >= 0.0) || !std::isfinite(alpha) || !std::isfinite(hazard))
    throw DomainError("collapse_random_horizon needs alpha >= 0 and hazard >= 0");
  if (alpha + hazard == 0.0)
    throw DegenerateMeasureError("alpha + hazard = 0 gives an infinite-mass measure");
  return DiscountMeasure::exponential(alpha + hazard);
}

}  // namespace deflab
