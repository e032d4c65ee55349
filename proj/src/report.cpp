#include "deflab/report.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <sstream>

#include "deflab/errors.hpp"
#include "json.hpp"

namespace deflab {

namespace {

using nlohmann::json;

// Non-finite values are written as inf/-inf/nan in CSV and as strings in JSON.
json json_number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

std::string grid_tag(const ExperimentConfig& c) {
  std::ostringstream os;
  os << std::setprecision(17) << c.t_max << "/" << c.steps;
  return os.str();
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ConfigError("cannot write '" + p.string() + "'");
  return f;
}

}  // namespace

void write_estimates_csv(const ExperimentResult& r, std::ostream& os) {
  const auto& c = r.config;
  const auto old = os.precision(std::numeric_limits<double>::max_digits10);
  os << "quantity,t,mean,std_error,n,infinite,tail_value,oracle,seed,n_paths,grid,tail_mass,convention\n";
  for (const auto& e : r.estimates) {
    os << e.quantity << ',' << e.t << ',' << e.est.mean << ',' << e.est.std_error << ',' << e.est.n << ','
       << (e.est.infinite ? 1 : 0) << ',' << e.tail_value << ',';
    if (e.oracle) os << *e.oracle;
    os << ',' << c.seed << ',' << c.n_paths << ',' << grid_tag(c) << ',' << e.est.tail_mass << ','
       << to_string(c.convention) << '\n';
  }
  os.precision(old);
}

void write_verdicts_jsonl(const ExperimentResult& r, std::ostream& os) {
  const auto& c = r.config;
  for (const auto& o : r.outcomes) {
    json params = json::object();
    for (const auto& [k, v] : o.params) params[k] = v;
    params["model"] = c.model;
    params["utility"] = c.utility == "log" ? std::string("log") : "power(p=" + std::to_string(c.p) + ")";
    params["grid"] = grid_tag(c);
    params["convention"] = to_string(c.convention);
    json j = {
        {"test", o.test},
        {"params", params},
        {"statistic", json_number(o.verdict.statistic)},
        {"threshold", json_number(o.verdict.threshold)},
        {"pass", o.verdict.pass()},
        {"verdict", to_string(o.verdict.kind)},
        {"seed", c.seed},
        {"n_paths", o.n_paths},
        {"tail_mass", json_number(o.tail_mass)},
        {"comparisons", o.verdict.comparisons},
        {"detail", o.verdict.detail},
    };
    os << j.dump() << '\n';
  }
}

void write_report_text(const ExperimentResult& r, std::ostream& os) {
  const auto& c = r.config;
  os << "run " << c.name << ": model=" << c.model << " utility=" << c.utility;
  if (c.utility != "log") os << " p=" << c.p;
  os << " kappa=" << c.kappa << " x=" << c.x << " y=" << r.y << " seed=" << c.seed << " paths=" << c.n_paths
     << " grid=" << grid_tag(c) << " convention=" << to_string(c.convention) << "\n";
  os << "note: every verdict covers only the sampled strategies and controls listed in its params;"
        " it is evidence for those families, not a proof over all admissible ones.\n\n";
  std::vector<RunSummary> rows;
  for (const auto& o : r.outcomes)
    rows.push_back({c.out_dir, o.test, o.verdict.pass(), o.verdict.statistic, o.verdict.threshold, o.verdict.detail});
  print_summary_table(rows, os);
}

void write_outputs(const ExperimentResult& r, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  {
    auto f = open_out(fs::path(dir) / "estimates.csv");
    write_estimates_csv(r, f);
  }
  {
    auto f = open_out(fs::path(dir) / "verdicts.jsonl");
    write_verdicts_jsonl(r, f);
  }
  {
    auto f = open_out(fs::path(dir) / "report.txt");
    write_report_text(r, f);
  }
  const auto& c = r.config;
  auto dump = [&](const std::optional<PathBundle>& b, const char* name) {
    if (!b) return;
    auto f = open_out(fs::path(dir) / name);
    f.precision(std::numeric_limits<double>::max_digits10);
    b->write_csv(f, c.sample_stride, c.sample_paths);
  };
  dump(r.sample_X, "paths_X.csv");
  dump(r.sample_Y, "paths_Y.csv");
  dump(r.sample_M, "paths_M.csv");
}

std::vector<RunSummary> read_verdicts(const std::vector<std::string>& dirs) {
  std::vector<RunSummary> out;
  for (const auto& d : dirs) {
    const auto path = std::filesystem::path(d) / "verdicts.jsonl";
    std::ifstream in(path);
    if (!in) throw ConfigError("no verdicts.jsonl in '" + d + "'");
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json j;
      try {
        j = json::parse(line);
      } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
      }
      auto num = [](const json& v) {
        return v.is_number() ? v.get<double>() : std::numeric_limits<double>::quiet_NaN();
      };
      out.push_back({d, j.at("test").get<std::string>(), j.at("pass").get<bool>(), num(j.at("statistic")),
                     num(j.at("threshold")), j.value("detail", std::string())});
    }
  }
  return out;
}

std::size_t print_summary_table(const std::vector<RunSummary>& rows, std::ostream& os) {
  std::size_t failed = 0;
  os << std::left << std::setw(24) << "run" << std::setw(20) << "test" << std::setw(6) << "pass" << std::right
     << std::setw(14) << "statistic" << std::setw(14) << "threshold" << "\n";
  for (const auto& r : rows) {
    if (!r.pass) ++failed;
    std::string run = std::filesystem::path(r.dir).filename().string();
    if (run.empty()) run = r.dir;
    os << std::left << std::setw(24) << run << std::setw(20) << r.test << std::setw(6) << (r.pass ? "PASS" : "FAIL")
       << std::right << std::setw(14) << std::setprecision(6) << r.statistic << std::setw(14) << r.threshold << "\n";
  }
  os << rows.size() - failed << "/" << rows.size() << " passed\n";
  return failed;
}

}  // namespace deflab
