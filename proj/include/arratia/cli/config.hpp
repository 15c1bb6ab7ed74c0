#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "arratia/flow_sim.hpp"
#include "arratia/stochastic_integrals.hpp"

namespace arratia::cli {

/// Bad configuration text. `line` is 0 when the problem is not tied to a line
/// (e.g. a missing required key).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(int line, const std::string& message);
  int line() const { return line_; }

 private:
  int line_;
};

const std::vector<std::string>& experiment_catalog();

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 0;
  std::size_t n_paths = 0;
  int n_steps = TimeGrid::kDefaultSteps;
  double U = 1.0;
  /// Explicit partition points; empty means dyadic of depth `dyadic_depth`.
  std::vector<double> partition;
  int dyadic_depth = 6;
  /// one, cos, tanh or table.
  std::string integrand = "one";
  /// (x, y) knots of a piecewise-linear integrand, flat outside the range.
  std::vector<std::pair<double, double>> integrand_table;
  bool bridge_correction = true;
  std::string output = ".";

  Partition resolve_partition() const;
  Integrand resolve_integrand() const;
  SimOptions sim_options() const;
};

/// Parses the key = value format, one pair per line, '#' starts a comment.
/// Required keys: experiment, n_paths, and seed unless `seed_fallback` is set.
ExperimentConfig parse_config(std::string_view text, std::optional<std::uint64_t> seed_fallback = std::nullopt);

/// Canonical key = value text; parse_config(to_config_text(c)) == c.
std::string to_config_text(const ExperimentConfig& config);

Integrand table_integrand(const std::vector<std::pair<double, double>>& knots);

}  // namespace arratia::cli
