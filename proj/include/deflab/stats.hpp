#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace deflab {

/// Fixed binary-tree summation; the result depends only on the order of `v`.
double pairwise_sum(std::span<const double> v);

/// Monte-Carlo mean with its standard error (sample std / √n).
struct MCEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
  double tail_mass = 0.0;  // κ-mass beyond T_max left out of the estimate
  bool infinite = false;   // some sample was +inf (dual) or -inf (primal)

  MCEstimate shifted(double c) const {
    MCEstimate e = *this;
    e.mean += c;
    return e;
  }
};

/// Throws DomainError for fewer than two samples.
MCEstimate summarize(std::span<const double> samples, double tail_mass = 0.0);

/// Estimate of E[a - b] from paired samples.
MCEstimate paired_difference(std::span<const double> a, std::span<const double> b);

enum class VerdictKind { Pass, Fail, Inconclusive };

struct Verdict {
  VerdictKind kind = VerdictKind::Inconclusive;
  double statistic = 0.0;
  double threshold = 0.0;
  std::string detail;
  std::size_t comparisons = 1;

  bool pass() const { return kind == VerdictKind::Pass; }
  static Verdict from(bool ok, double statistic, double threshold, std::string detail, std::size_t comparisons = 1) {
    return {ok ? VerdictKind::Pass : VerdictKind::Fail, statistic, threshold, std::move(detail), comparisons};
  }
};

const char* to_string(VerdictKind k);

}  // namespace deflab
