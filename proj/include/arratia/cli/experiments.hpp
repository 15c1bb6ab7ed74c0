#pragma once

#include "arratia/cli/config.hpp"
#include "arratia/cli/report.hpp"

namespace arratia::cli {

/// Runs the configured experiment. The report body depends only on the
/// config, never on `workers`; wall_clock_seconds is the only volatile field.
Report run_experiment(const ExperimentConfig& config, unsigned workers = 1);

}  // namespace arratia::cli
