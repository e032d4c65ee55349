#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "deflab/deflator.hpp"
#include "deflab/discount.hpp"
#include "deflab/market.hpp"
#include "deflab/preference.hpp"

namespace deflab {

/// Flat key = value file: one assignment per line, '#' starts a comment, strings may
/// be quoted and lists are written `[a, b, c]` or `a, b, c`. Duplicate keys are an error.
using RawConfig = std::map<std::string, std::string>;
RawConfig parse_flat_config(std::istream& in, const std::string& origin = "<config>");

struct ExperimentConfig {
  std::string name = "experiment";

  std::string model = "bs";  // bs | bessel3
  double lambda = 0.4;
  double sigma = 0.2;
  BesselMethod bessel_method = BesselMethod::Norm3d;

  std::string utility = "power";  // power | log
  double p = 0.5;

  std::string kappa = "exponential";  // exponential | random_horizon | stopping | tabulated
  double alpha = 0.1;
  double hazard = 0.0;
  double horizon = 1.0;
  std::string kappa_csv;

  double t_max = 100.0;
  std::size_t steps = 2000;
  std::size_t n_paths = 10000;
  std::uint64_t seed = 20240601;
  unsigned threads = 1;
  Convention convention = Convention::LebesgueForm;

  double x = 1.0;
  std::optional<double> y;  // defaults to u'(x) when a closed form exists

  std::string strategy = "optimal";  // optimal | merton | constant
  double theta = 0.0;                // strategy = constant
  double theta_scale = 1.0;          // multiplies the optimal fraction

  std::string beta = "optimal";  // optimal | constant
  double beta_value = 0.0;
  double psi = 0.0;

  std::vector<std::string> tests = {"budget_saturation", "primal", "dual", "weak_duality", "martingale",
                                    "potential", "owp", "foc"};
  std::vector<double> checkpoints = {0.0, 5.0, 10.0};
  std::size_t candidates = 20;
  std::size_t candidate_paths = 2000;

  std::string out_dir = "out";
  std::size_t sample_paths = 20;
  std::size_t sample_stride = 10;

  UtilitySpec utility_spec() const;
  MarketModel market() const;
  DiscountMeasure discount() const;
  TimeGrid grid() const { return TimeGrid(t_max, steps); }

  /// α of the exponential κ in use; a random horizon adds its hazard.
  double effective_alpha() const { return kappa == "random_horizon" ? alpha + hazard : alpha; }

  /// A closed-form optimum exists: exponential κ with either BS or log utility.
  bool has_closed_form() const;

  /// Re-checks every module precondition; throws ConfigError or DomainError.
  void validate() const;
};

/// Recognized test names, in execution order.
const std::vector<std::string>& known_tests();

ExperimentConfig config_from_raw(const RawConfig& raw);
ExperimentConfig load_config(const std::string& path);

/// Seed precedence: explicit flag, then DEFLATOR_LAB_SEED, then the config value.
std::uint64_t resolve_seed(std::uint64_t config_seed, const std::optional<std::uint64_t>& flag);

}  // namespace deflab
