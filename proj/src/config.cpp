#include "deflab/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "deflab/closed_form.hpp"
#include "deflab/errors.hpp"

namespace deflab {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Drops a trailing comment that is not inside quotes.
std::string strip_comment(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  return s;
}

std::vector<std::string> split_list(std::string v) {
  v = trim(v);
  if (!v.empty() && v.front() == '[') {
    if (v.back() != ']') throw ConfigError("unterminated list: " + v);
    v = v.substr(1, v.size() - 2);
  }
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = unquote(trim(item));
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

class Reader {
 public:
  explicit Reader(const RawConfig& raw) : raw_(raw) {}

  const std::string* find(const std::string& key) {
    used_.insert(key);
    auto it = raw_.find(key);
    return it == raw_.end() ? nullptr : &it->second;
  }

  void str(const std::string& key, std::string& out) {
    if (auto v = find(key)) out = unquote(*v);
  }

  void num(const std::string& key, double& out) {
    if (auto v = find(key)) out = to_double(key, unquote(*v));
  }

  void opt_num(const std::string& key, std::optional<double>& out) {
    if (auto v = find(key)) out = to_double(key, unquote(*v));
  }

  template <class T>
  void count(const std::string& key, T& out) {
    if (auto v = find(key)) {
      const std::string s = unquote(*v);
      unsigned long long n = 0;
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
      if (ec != std::errc() || ptr != s.data() + s.size())
        throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + s + "'");
      out = static_cast<T>(n);
    }
  }

  void list(const std::string& key, std::vector<std::string>& out) {
    if (auto v = find(key)) out = split_list(*v);
  }

  void num_list(const std::string& key, std::vector<double>& out) {
    if (auto v = find(key)) {
      out.clear();
      for (const auto& s : split_list(*v)) out.push_back(to_double(key, s));
    }
  }

  void reject_unknown() const {
    for (const auto& [k, v] : raw_)
      if (!used_.count(k)) throw ConfigError("unknown config key '" + k + "'");
  }

 private:
  static double to_double(const std::string& key, const std::string& s) {
    char* end = nullptr;
    const double d = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size())
      throw ConfigError("key '" + key + "': expected a number, got '" + s + "'");
    return d;
  }

  const RawConfig& raw_;
  std::set<std::string> used_;
};

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

RawConfig parse_flat_config(std::istream& in, const std::string& origin) {
  RawConfig out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = trim(strip_comment(line));
    if (s.empty()) continue;
    const auto where = origin + ":" + std::to_string(lineno);
    if (s.front() == '[') throw ConfigError(where + ": tables are not supported");
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    if (value.empty()) throw ConfigError(where + ": empty value for '" + key + "'");
    if (!out.emplace(key, value).second) throw ConfigError(where + ": duplicate key '" + key + "'");
  }
  return out;
}

const std::vector<std::string>& known_tests() {
  static const std::vector<std::string> names = {
      "budget_saturation", "budget_inequality", "primal",        "dual",      "weak_duality",
      "martingale",        "supermartingale",   "potential",     "owp",       "foc",
      "random_budget",     "psi_zero",          "dual_profile",
  };
  return names;
}

UtilitySpec ExperimentConfig::utility_spec() const {
  if (utility == "log") return UtilitySpec::log();
  if (utility == "power") return UtilitySpec::power(p);
  throw ConfigError("utility must be power or log, got '" + utility + "'");
}

MarketModel ExperimentConfig::market() const {
  if (model == "bs") return MarketModel::black_scholes(lambda, sigma);
  if (model == "bessel3") return MarketModel::bessel3(VolSpec::constant(sigma));
  throw ConfigError("model must be bs or bessel3, got '" + model + "'");
}

DiscountMeasure ExperimentConfig::discount() const {
  if (kappa == "exponential") return DiscountMeasure::exponential(alpha);
  if (kappa == "random_horizon") return collapse_random_horizon(alpha, hazard);
  if (kappa == "stopping") return DiscountMeasure::stopping(horizon);
  if (kappa == "tabulated") return DiscountMeasure::load_csv(kappa_csv);
  throw ConfigError("kappa must be exponential, random_horizon, stopping or tabulated, got '" + kappa + "'");
}

bool ExperimentConfig::has_closed_form() const {
  const bool exp_kappa = kappa == "exponential" || kappa == "random_horizon";
  if (!exp_kappa) return false;
  return utility == "log" || model == "bs";
}

void ExperimentConfig::validate() const {
  const auto U = utility_spec();
  market();
  discount();
  require(t_max > 0.0 && std::isfinite(t_max), "t_max must be positive");
  require(steps >= 1, "steps must be >= 1");
  require(n_paths >= 2, "n_paths must be >= 2");
  require(threads >= 1, "threads must be >= 1");
  require(x > 0.0 && std::isfinite(x), "x must be positive");
  if (y) require(*y > 0.0 && std::isfinite(*y), "y must be positive");
  require(sigma > 0.0, "sigma must be positive");
  require(strategy == "optimal" || strategy == "merton" || strategy == "constant",
          "strategy must be optimal, merton or constant");
  require(beta == "optimal" || beta == "constant", "beta must be optimal or constant");
  if (beta == "constant") require(beta_value >= 0.0, "beta_value must be >= 0");
  require(sample_stride >= 1, "sample_stride must be >= 1");
  if (strategy == "merton") require(model == "bs", "strategy = merton needs model = bs");
  for (const auto& t : tests)
    require(std::find(known_tests().begin(), known_tests().end(), t) != known_tests().end(),
            "unknown test '" + t + "'");
  require(!checkpoints.empty(), "checkpoints must not be empty");
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    require(checkpoints[k] >= 0.0 && checkpoints[k] <= t_max, "checkpoints must lie in [0, t_max]");
    if (k > 0) require(checkpoints[k] > checkpoints[k - 1], "checkpoints must increase");
    grid().node_at(checkpoints[k]);
  }
  // The closed-form optimum needs a finite dual; this surfaces InfiniteDualError at load time.
  if (has_closed_form()) bs_beta_hat(effective_alpha(), lambda, U);
}

ExperimentConfig config_from_raw(const RawConfig& raw) {
  ExperimentConfig c;
  Reader r(raw);
  r.str("name", c.name);
  r.str("model", c.model);
  r.num("lambda", c.lambda);
  r.num("sigma", c.sigma);
  std::string method;
  r.str("bessel_method", method);
  if (!method.empty()) {
    if (method == "euler")
      c.bessel_method = BesselMethod::Euler;
    else if (method == "norm3d")
      c.bessel_method = BesselMethod::Norm3d;
    else
      throw ConfigError("bessel_method must be euler or norm3d");
  }
  r.str("utility", c.utility);
  r.num("p", c.p);
  r.str("kappa", c.kappa);
  r.num("alpha", c.alpha);
  r.num("hazard", c.hazard);
  r.num("horizon", c.horizon);
  r.str("kappa_csv", c.kappa_csv);
  r.num("t_max", c.t_max);
  r.count("steps", c.steps);
  r.count("n_paths", c.n_paths);
  r.count("seed", c.seed);
  r.count("threads", c.threads);
  std::string conv;
  r.str("convention", conv);
  if (!conv.empty()) {
    try {
      c.convention = parse_convention(conv);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }
  r.num("x", c.x);
  r.opt_num("y", c.y);
  r.str("strategy", c.strategy);
  r.num("theta", c.theta);
  r.num("theta_scale", c.theta_scale);
  r.str("beta", c.beta);
  r.num("beta_value", c.beta_value);
  r.num("psi", c.psi);
  r.list("tests", c.tests);
  r.num_list("checkpoints", c.checkpoints);
  r.count("candidates", c.candidates);
  r.count("candidate_paths", c.candidate_paths);
  r.str("out_dir", c.out_dir);
  r.count("sample_paths", c.sample_paths);
  r.count("sample_stride", c.sample_stride);
  r.reject_unknown();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  return config_from_raw(parse_flat_config(in, path));
}

std::uint64_t resolve_seed(std::uint64_t config_seed, const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("DEFLATOR_LAB_SEED"); env && *env) {
    std::uint64_t s = 0;
    const std::string v(env);
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), s);
    if (ec != std::errc() || ptr != v.data() + v.size())
      throw ConfigError("DEFLATOR_LAB_SEED must be a non-negative integer, got '" + v + "'");
    return s;
  }
  return config_seed;
}

}  // namespace deflab
