#include "arratia/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <sstream>

#include "arratia/errors.hpp"

namespace arratia::cli {

ConfigError::ConfigError(int line, const std::string& message)
    : std::runtime_error(line > 0 ? "config line " + std::to_string(line) + ": " + message : "config: " + message),
      line_(line) {}

const std::vector<std::string>& experiment_catalog() {
  static const std::vector<std::string> names{
      "zero-mean",     "isometry",     "refinement-monotone", "meeting-time",
      "small-u-slope", "rate-fit",     "angle-exit",          "martingale-orthogonality",
      "clark-verify",  "energy-identity", "lemma31",          "series-truncation"};
  return names;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view v, int line, const std::string& key) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError(line, "invalid number for '" + key + "': '" + std::string(v) + "'");
  }
  return out;
}

std::int64_t parse_integer(std::string_view v, int line, const std::string& key) {
  std::int64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(line, "invalid integer for '" + key + "': '" + std::string(v) + "'");
  }
  return out;
}

std::vector<std::string_view> split(std::string_view v, char sep) {
  std::vector<std::string_view> parts;
  std::size_t begin = 0;
  while (true) {
    const auto end = v.find(sep, begin);
    parts.push_back(trim(v.substr(begin, end == std::string_view::npos ? end : end - begin)));
    if (end == std::string_view::npos) break;
    begin = end + 1;
  }
  return parts;
}

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, std::optional<std::uint64_t> seed_fallback) {
  ExperimentConfig c;
  std::map<std::string, int> seen;
  bool u_set = false;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    std::string_view line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(line_no, "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string_view value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(line_no, "empty key");
    if (value.empty()) throw ConfigError(line_no, "empty value for '" + key + "'");
    if (seen.count(key)) throw ConfigError(line_no, "duplicate key '" + key + "'");
    seen[key] = line_no;

    if (key == "experiment") {
      c.experiment = std::string(value);
      const auto& names = experiment_catalog();
      if (std::find(names.begin(), names.end(), c.experiment) == names.end()) {
        throw ConfigError(line_no, "unknown experiment '" + c.experiment + "'");
      }
    } else if (key == "seed") {
      const auto s = parse_integer(value, line_no, key);
      if (s <= 0) throw ConfigError(line_no, "'seed' must be positive");
      c.seed = static_cast<std::uint64_t>(s);
    } else if (key == "n_paths") {
      const auto n = parse_integer(value, line_no, key);
      if (n < 2) throw ConfigError(line_no, "'n_paths' must be at least 2");
      c.n_paths = static_cast<std::size_t>(n);
    } else if (key == "n_steps") {
      const auto n = parse_integer(value, line_no, key);
      if (n < 1 || n > 100000000) throw ConfigError(line_no, "'n_steps' must be in [1, 1e8]");
      c.n_steps = static_cast<int>(n);
    } else if (key == "U") {
      c.U = parse_double(value, line_no, key);
      if (!(c.U > 0.0)) throw ConfigError(line_no, "'U' must be positive");
      u_set = true;
    } else if (key == "partition") {
      for (auto part : split(value, ',')) c.partition.push_back(parse_double(part, line_no, key));
      try {
        Partition check(c.partition);
      } catch (const std::exception& e) {
        throw ConfigError(line_no, std::string("invalid 'partition': ") + e.what());
      }
    } else if (key == "dyadic_depth") {
      const auto d = parse_integer(value, line_no, key);
      if (d < 1 || d > 16) throw ConfigError(line_no, "'dyadic_depth' must be in [1, 16]");
      c.dyadic_depth = static_cast<int>(d);
    } else if (key == "integrand") {
      c.integrand = std::string(value);
      if (c.integrand != "one" && c.integrand != "cos" && c.integrand != "tanh" && c.integrand != "table") {
        throw ConfigError(line_no, "unknown integrand '" + c.integrand + "' (one, cos, tanh, table)");
      }
    } else if (key == "integrand_table") {
      for (auto knot : split(value, ',')) {
        const auto xy = split(knot, ':');
        if (xy.size() != 2) throw ConfigError(line_no, "'integrand_table' entries must be x:y");
        c.integrand_table.emplace_back(parse_double(xy[0], line_no, key), parse_double(xy[1], line_no, key));
      }
      for (std::size_t i = 1; i < c.integrand_table.size(); ++i) {
        if (!(c.integrand_table[i].first > c.integrand_table[i - 1].first)) {
          throw ConfigError(line_no, "'integrand_table' abscissae must be strictly increasing");
        }
      }
    } else if (key == "bridge_correction") {
      if (value == "on") {
        c.bridge_correction = true;
      } else if (value == "off") {
        c.bridge_correction = false;
      } else {
        throw ConfigError(line_no, "'bridge_correction' must be on or off");
      }
    } else if (key == "output") {
      c.output = std::string(value);
    } else {
      throw ConfigError(line_no, "unknown key '" + key + "'");
    }
  }

  if (c.experiment.empty()) throw ConfigError(0, "missing required key 'experiment'");
  if (c.n_paths == 0) throw ConfigError(0, "missing required key 'n_paths'");
  if (!seen.count("seed")) {
    if (!seed_fallback) throw ConfigError(0, "missing required key 'seed'");
    c.seed = *seed_fallback;
  }
  if (c.integrand == "table" && c.integrand_table.empty()) {
    throw ConfigError(seen.at("integrand"), "integrand = table needs 'integrand_table'");
  }
  if (c.integrand != "table" && !c.integrand_table.empty()) {
    throw ConfigError(seen.at("integrand_table"), "'integrand_table' requires integrand = table");
  }
  if (!c.partition.empty()) {
    const double extent = c.partition.back();
    if (u_set && std::fabs(extent - c.U) > 1e-12 * std::max(1.0, c.U)) {
      throw ConfigError(seen.at("partition"), "'partition' must end at U");
    }
    c.U = extent;
    if (seen.count("dyadic_depth")) throw ConfigError(seen.at("dyadic_depth"), "give partition or dyadic_depth, not both");
  }
  return c;
}

std::string to_config_text(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "experiment = " << c.experiment << '\n';
  out << "seed = " << c.seed << '\n';
  out << "n_paths = " << c.n_paths << '\n';
  out << "n_steps = " << c.n_steps << '\n';
  if (c.partition.empty()) {
    out << "U = " << format_double(c.U) << '\n';
    out << "dyadic_depth = " << c.dyadic_depth << '\n';
  } else {
    out << "partition = ";
    for (std::size_t i = 0; i < c.partition.size(); ++i) out << (i ? ", " : "") << format_double(c.partition[i]);
    out << '\n';
  }
  out << "integrand = " << c.integrand << '\n';
  if (!c.integrand_table.empty()) {
    out << "integrand_table = ";
    for (std::size_t i = 0; i < c.integrand_table.size(); ++i) {
      out << (i ? ", " : "") << format_double(c.integrand_table[i].first) << ':'
          << format_double(c.integrand_table[i].second);
    }
    out << '\n';
  }
  out << "bridge_correction = " << (c.bridge_correction ? "on" : "off") << '\n';
  out << "output = " << c.output << '\n';
  return out.str();
}

Partition ExperimentConfig::resolve_partition() const {
  if (!partition.empty()) return Partition(partition);
  return Partition::dyadic(U, dyadic_depth);
}

Integrand table_integrand(const std::vector<std::pair<double, double>>& knots) {
  if (knots.empty()) throw InvalidArgument("table_integrand: no knots");
  double sup = 0.0;
  for (const auto& k : knots) sup = std::max(sup, std::fabs(k.second));
  return Integrand("table",
                   [knots](double x) {
                     if (x <= knots.front().first) return knots.front().second;
                     if (x >= knots.back().first) return knots.back().second;
                     const auto it = std::upper_bound(knots.begin(), knots.end(), x,
                                                      [](double v, const auto& k) { return v < k.first; });
                     const auto& hi = *it;
                     const auto& lo = *(it - 1);
                     const double w = (x - lo.first) / (hi.first - lo.first);
                     return lo.second + w * (hi.second - lo.second);
                   },
                   sup);
}

Integrand ExperimentConfig::resolve_integrand() const {
  if (integrand == "one") return Integrand::constant(1.0);
  if (integrand == "cos") return Integrand::cosine();
  if (integrand == "tanh") return Integrand::hyperbolic_tangent();
  if (integrand == "table") return table_integrand(integrand_table);
  throw InvalidArgument("unknown integrand '" + integrand + "'");
}

SimOptions ExperimentConfig::sim_options() const {
  SimOptions o;
  o.bridge_correction = bridge_correction;
  return o;
}

}  // namespace arratia::cli
