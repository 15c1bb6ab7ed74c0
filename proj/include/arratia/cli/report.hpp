#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "arratia/cli/config.hpp"
#include "json.hpp"

namespace arratia::cli {

/// A check passes when value <= threshold; NaN never passes.
struct Check {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

/// Named table written as its own CSV file.
struct PlotSeries {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

struct ResultRow {
  double mesh = 0.0;
  std::size_t n_paths = 0;
  double mean = 0.0;
  double std_error = 0.0;
};

struct Report {
  ExperimentConfig config;
  std::vector<Check> checks;
  std::vector<PlotSeries> plots;
  std::vector<ResultRow> results;
  nlohmann::ordered_json details = nlohmann::ordered_json::object();
  double wall_clock_seconds = 0.0;

  /// Adds a check; throws std::logic_error on a repeated name.
  void add_check(const std::string& name, double value, double threshold);
  bool all_pass() const;
};

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ReportFormat { json, csv };

nlohmann::ordered_json report_to_json(const Report& report);
/// Header `check,value,threshold,pass` followed by one row per check.
std::string checks_to_csv(const Report& report);
std::string plot_to_csv(const PlotSeries& series);
/// Header `experiment,mesh,n_paths,mean,stderr`.
std::string results_to_csv(const Report& report);

/// Writes <experiment>.json or <experiment>_checks.csv, one
/// <experiment>_<plot>.csv per plot series and, when present,
/// <experiment>_results.csv into `dir`. Returns the written paths.
/// Throws OutputError when the directory or a file cannot be written.
std::vector<std::filesystem::path> emit_report(const Report& report, ReportFormat format,
                                               const std::filesystem::path& dir);

}  // namespace arratia::cli
