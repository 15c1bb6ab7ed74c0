#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "arratia/cli/config.hpp"
#include "arratia/cli/experiments.hpp"
#include "arratia/cli/report.hpp"

namespace {

constexpr int kPass = 0;
constexpr int kCheckFailure = 1;
constexpr int kUsage = 2;
constexpr int kIo = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace arratia::cli;

  CLI::App app{"Coalescing Brownian flow experiments"};
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  std::string format = "json";
  app.add_option("--config", config_path, "experiment config file (key = value)")->required();
  app.add_option("--seed", seed, "seed; overrides the config and ARRATIA_SEED");
  app.add_option("--out", out_dir, "output directory; overrides the config 'output' key");
  app.add_option("--workers", workers, "worker threads")->check(CLI::Range(1u, 1024u));
  app.add_option("--format", format, "report format")->check(CLI::IsMember({"json", "csv"}));
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kUsage;
  }

  std::ifstream in(config_path);
  if (!in) {
    std::cerr << "error: cannot read config '" << config_path << "'\n";
    return kUsage;
  }
  std::stringstream text;
  text << in.rdbuf();

  std::optional<std::uint64_t> env_seed;
  if (const char* env = std::getenv("ARRATIA_SEED"); env && *env) {
    char* end = nullptr;
    const auto v = std::strtoull(env, &end, 10);
    if (*end != '\0' || v == 0) {
      std::cerr << "error: ARRATIA_SEED must be a positive integer\n";
      return kUsage;
    }
    env_seed = v;
  }

  ExperimentConfig config;
  try {
    config = parse_config(text.str(), seed ? seed : env_seed);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  if (seed) config.seed = *seed;
  if (!out_dir.empty()) config.output = out_dir;

  Report report;
  try {
    report = run_experiment(config, workers);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    const auto files = emit_report(report, format == "csv" ? ReportFormat::csv : ReportFormat::json, config.output);
    for (const auto& f : files) std::cout << "wrote " << f.string() << '\n';
  } catch (const OutputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  }
  for (const auto& c : report.checks) {
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " value=" << c.value << " threshold=" << c.threshold
              << '\n';
  }
  std::cout << "wall_clock_seconds=" << report.wall_clock_seconds << '\n';
  return report.all_pass() ? kPass : kCheckFailure;
}
