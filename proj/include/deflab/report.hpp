#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "deflab/experiment.hpp"

namespace deflab {

/// estimates.csv: one row per estimate, doubles at 17 significant digits so reruns
/// compare byte for byte.
void write_estimates_csv(const ExperimentResult& r, std::ostream& os);

/// verdicts.jsonl: one JSON object per selected test.
void write_verdicts_jsonl(const ExperimentResult& r, std::ostream& os);

/// Human-readable summary of one run.
void write_report_text(const ExperimentResult& r, std::ostream& os);

/// Writes estimates.csv, verdicts.jsonl, report.txt and paths_{X,Y,M}.csv into `dir`.
void write_outputs(const ExperimentResult& r, const std::string& dir);

struct RunSummary {
  std::string dir;
  std::string test;
  bool pass = false;
  double statistic = 0.0;
  double threshold = 0.0;
  std::string detail;
};

/// Reads verdicts.jsonl from each run directory, in order.
std::vector<RunSummary> read_verdicts(const std::vector<std::string>& dirs);

/// Prints a fixed-width table; returns the number of failing rows.
std::size_t print_summary_table(const std::vector<RunSummary>& rows, std::ostream& os);

}  // namespace deflab
