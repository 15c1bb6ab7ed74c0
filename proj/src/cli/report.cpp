#include "arratia/cli/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace arratia::cli {

void Report::add_check(const std::string& name, double value, double threshold) {
  for (const auto& c : checks) {
    if (c.name == name) throw std::logic_error("duplicate check '" + name + "'");
  }
  checks.push_back({name, value, threshold, value <= threshold});
}

bool Report::all_pass() const {
  for (const auto& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

namespace {

// Shortest round-trip representation; non-finite values as nan/inf.
std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

// JSON has no non-finite numbers; those become strings.
nlohmann::ordered_json number(double x) {
  if (std::isfinite(x)) return x;
  return fmt(x);
}

nlohmann::ordered_json config_to_json(const ExperimentConfig& c) {
  nlohmann::ordered_json j;
  j["experiment"] = c.experiment;
  j["seed"] = c.seed;
  j["n_paths"] = c.n_paths;
  j["n_steps"] = c.n_steps;
  j["U"] = c.U;
  if (c.partition.empty()) {
    j["dyadic_depth"] = c.dyadic_depth;
  } else {
    j["partition"] = c.partition;
  }
  j["integrand"] = c.integrand;
  if (!c.integrand_table.empty()) {
    auto table = nlohmann::ordered_json::array();
    for (const auto& [x, y] : c.integrand_table) table.push_back({x, y});
    j["integrand_table"] = table;
  }
  j["bridge_correction"] = c.bridge_correction;
  j["output"] = c.output;
  return j;
}

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw OutputError("cannot open '" + path.string() + "' for writing");
  out << body;
  out.flush();
  if (!out) throw OutputError("failed writing '" + path.string() + "'");
}

}  // namespace

nlohmann::ordered_json report_to_json(const Report& report) {
  nlohmann::ordered_json j;
  j["config"] = config_to_json(report.config);
  auto checks = nlohmann::ordered_json::array();
  for (const auto& c : report.checks) {
    checks.push_back({{"name", c.name}, {"value", number(c.value)}, {"threshold", number(c.threshold)}, {"pass", c.pass}});
  }
  j["checks"] = checks;
  j["all_pass"] = report.all_pass();
  j["details"] = report.details;
  j["wall_clock_seconds"] = report.wall_clock_seconds;
  return j;
}

std::string checks_to_csv(const Report& report) {
  std::ostringstream out;
  out << "check,value,threshold,pass\n";
  for (const auto& c : report.checks) {
    out << c.name << ',' << fmt(c.value) << ',' << fmt(c.threshold) << ',' << (c.pass ? "true" : "false") << '\n';
  }
  return out.str();
}

std::string plot_to_csv(const PlotSeries& series) {
  std::ostringstream out;
  for (std::size_t i = 0; i < series.columns.size(); ++i) out << (i ? "," : "") << series.columns[i];
  out << '\n';
  for (const auto& row : series.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << fmt(row[i]);
    out << '\n';
  }
  return out.str();
}

std::string results_to_csv(const Report& report) {
  std::ostringstream out;
  out << "experiment,mesh,n_paths,mean,stderr\n";
  for (const auto& r : report.results) {
    out << report.config.experiment << ',' << fmt(r.mesh) << ',' << r.n_paths << ',' << fmt(r.mean) << ','
        << fmt(r.std_error) << '\n';
  }
  return out.str();
}

std::vector<std::filesystem::path> emit_report(const Report& report, ReportFormat format,
                                               const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw OutputError("cannot create output directory '" + dir.string() + "'");
  }
  const std::string stem = report.config.experiment;
  std::vector<std::filesystem::path> written;
  if (format == ReportFormat::json) {
    written.push_back(dir / (stem + ".json"));
    write_file(written.back(), report_to_json(report).dump(2) + "\n");
  } else {
    written.push_back(dir / (stem + "_checks.csv"));
    write_file(written.back(), checks_to_csv(report));
  }
  for (const auto& series : report.plots) {
    written.push_back(dir / (stem + "_" + series.name + ".csv"));
    write_file(written.back(), plot_to_csv(series));
  }
  if (!report.results.empty()) {
    written.push_back(dir / (stem + "_results.csv"));
    write_file(written.back(), results_to_csv(report));
  }
  return written;
}

}  // namespace arratia::cli
