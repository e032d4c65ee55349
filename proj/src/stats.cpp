#include "deflab/stats.hpp"

#include <cmath>
#include <limits>

#include "deflab/errors.hpp"

namespace deflab {

double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

MCEstimate summarize(std::span<const double> samples, double tail_mass) {
  if (samples.size() < 2) throw DomainError("an MC estimate needs at least two samples");
  MCEstimate e;
  e.n = samples.size();
  e.tail_mass = tail_mass;
  for (double s : samples) {
    if (std::isinf(s)) {
      e.infinite = true;
      e.mean = s;
      e.std_error = std::numeric_limits<double>::infinity();
      return e;
    }
  }
  const double n = static_cast<double>(e.n);
  e.mean = pairwise_sum(samples) / n;
  std::vector<double> sq(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double d = samples[i] - e.mean;
    sq[i] = d * d;
  }
  const double var = pairwise_sum(sq) / (n - 1.0);
  e.std_error = std::sqrt(var / n);
  return e;
}

MCEstimate paired_difference(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw StructuralError("paired difference needs equal sample counts");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  return summarize(d);
}

const char* to_string(VerdictKind k) {
  switch (k) {
    case VerdictKind::Pass:
      return "pass";
    case VerdictKind::Fail:
      return "fail";
    case VerdictKind::Inconclusive:
      break;
  }
  return "inconclusive";
}

}  // namespace deflab
