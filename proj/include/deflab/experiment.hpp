#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "deflab/config.hpp"
#include "deflab/grid.hpp"
#include "deflab/stats.hpp"

namespace deflab {

/// One estimate row of estimates.csv.
struct EstimateRow {
  std::string quantity;
  double t = 0.0;  // checkpoint time, or t_max for integrals
  MCEstimate est;
  double tail_value = 0.0;  // analytic part beyond t_max added when comparing, 0 if none
  std::optional<double> oracle;
};

struct TestOutcome {
  std::string test;
  std::vector<std::pair<std::string, std::string>> params;
  Verdict verdict;
  std::size_t n_paths = 0;
  double tail_mass = 0.0;
};

struct ExperimentResult {
  ExperimentConfig config;  // with the resolved seed and y
  double y = 0.0;
  std::optional<double> beta_hat;
  std::vector<EstimateRow> estimates;
  std::vector<TestOutcome> outcomes;
  // first sample_paths paths of X, Y and M
  std::optional<PathBundle> sample_X, sample_Y, sample_M;

  bool all_pass() const;
};

/// Runs the selected tests. Throws ConfigError when a selected test needs a
/// closed-form oracle the configuration does not have, and InfiniteDualError for
/// a non-finite dual.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

}  // namespace deflab
