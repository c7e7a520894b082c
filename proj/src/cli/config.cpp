#include "mpcl/cli.hpp"

#include "mpcl/error.hpp"
#include "mpcl/format.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace mpcl::cli {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "synth.means",          "synth.variance",          "synth.points_per_class",
      "synth.seed",           "graph.source",            "graph.edges",
      "graph.labels",         "graph.groups",            "graph.epsilon",
      "graph.weight_mode",    "graph.self_loops",        "dynamics.rule",
      "dynamics.alpha",       "dynamics.steps",          "dynamics.temperature",
      "dynamics.beta",        "dynamics.stages",         "dynamics.delta_t",
      "dynamics.preprocess",  "dynamics.weighting",      "dynamics.normalization_set",
      "dynamics.init",        "dynamics.init_lo",        "dynamics.init_hi",
      "dynamics.init_path",   "dynamics.dim",            "dynamics.seed",
      "outputs.dir",          "outputs.snapshot_every",  "outputs.plot",
      "outputs.snapshots",    "analyze.features",        "analyze.graph",
      "analyze.labels",       "analyze.reference",       "analyze.temperature",
      "check.seed",           "check.nodes",             "check.dim",
  };
  return keys;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::pair<std::string, std::string> split_assignment(std::string_view line, std::size_t line_no) {
  const std::size_t eq = line.find('=');
  if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no);
  std::string key(trim(line.substr(0, eq)));
  std::string value(trim(line.substr(eq + 1)));
  if (key.empty()) throw ParseError("empty key", line_no);
  if (!known_keys().count(key)) throw ParseError("unknown setting '" + key + "'", line_no);
  return {std::move(key), std::move(value)};
}

}  // namespace

Config Config::parse(std::string_view text) {
  Config c;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = trim(text.substr(pos, end - pos));
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    auto [key, value] = split_assignment(line, line_no);
    c.values_[key] = value;
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) { return parse(read_text(path)); }

void Config::set(std::string_view assignment) {
  auto [key, value] = split_assignment(trim(assignment), 0);
  values_[key] = value;
}

void Config::set(const std::string& key, const std::string& value) {
  if (!known_keys().count(key)) throw ConfigError("unknown setting '" + key + "'");
  values_[key] = value;
}

std::string Config::get(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    return parse_double(it->second);
  } catch (const ParseError&) {
    throw ConfigError(key + ": expected a number, got '" + it->second + "'");
  }
}

long Config::get_int(const std::string& key, long fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& s = it->second;
  long value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
    throw ConfigError(key + ": expected an integer, got '" + s + "'");
  return value;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  if (it->second == "true" || it->second == "1" || it->second == "on") return true;
  if (it->second == "false" || it->second == "0" || it->second == "off") return false;
  throw ConfigError(key + ": expected true/false, got '" + it->second + "'");
}

std::string Config::render() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

GaussianMixtureConfig synth_config(const Config& c) {
  GaussianMixtureConfig cfg;
  if (c.has("synth.means")) {
    cfg.means.clear();
    std::stringstream ss(c.get("synth.means", ""));
    std::string pair;
    while (std::getline(ss, pair, ';')) {
      const std::size_t comma = pair.find(',');
      if (comma == std::string::npos)
        throw ConfigError("synth.means: expected 'x,y;x,y', got '" + pair + "'");
      try {
        cfg.means.push_back({parse_double(pair.substr(0, comma)), parse_double(pair.substr(comma + 1))});
      } catch (const ParseError&) {
        throw ConfigError("synth.means: bad number in '" + pair + "'");
      }
    }
  }
  cfg.variance = c.get_double("synth.variance", cfg.variance);
  cfg.points_per_class = static_cast<int>(c.get_int("synth.points_per_class", cfg.points_per_class));
  const long seed = c.get_int("synth.seed", 0);
  if (seed < 0) throw ConfigError("synth.seed must be >= 0");
  cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.validate();
  return cfg;
}

DynamicsConfig dynamics_config(const Config& c) {
  DynamicsConfig cfg;
  cfg.rule = parse_rule(c.get("dynamics.rule", std::string(to_string(cfg.rule))));
  cfg.alpha = c.get_double("dynamics.alpha", cfg.alpha);
  cfg.steps = static_cast<int>(c.get_int("dynamics.steps", cfg.steps));
  cfg.temperature = c.get_double("dynamics.temperature", cfg.temperature);
  cfg.beta = c.get_double("dynamics.beta", cfg.beta);
  cfg.stages = static_cast<int>(c.get_int("dynamics.stages", cfg.stages));
  cfg.delta_t = c.get_double("dynamics.delta_t", cfg.delta_t);
  cfg.preprocess = parse_preprocess(c.get("dynamics.preprocess", "none"));
  cfg.weighting = parse_affinity_weighting(c.get("dynamics.weighting", "follow_graph"));
  cfg.normalization = parse_normalization_set(c.get("dynamics.normalization_set", "all"));
  cfg.init_lo = c.get_double("dynamics.init_lo", cfg.init_lo);
  cfg.init_hi = c.get_double("dynamics.init_hi", cfg.init_hi);
  cfg.dim = static_cast<int>(c.get_int("dynamics.dim", cfg.dim));
  const long seed = c.get_int("dynamics.seed", 0);
  if (seed < 0) throw ConfigError("dynamics.seed must be >= 0");
  cfg.seed = static_cast<std::uint64_t>(seed);
  cfg.snapshot_every = static_cast<int>(c.get_int("outputs.snapshot_every", cfg.snapshot_every));
  cfg.keep_snapshots = c.get_bool("outputs.snapshots", true);
  const std::string init = c.get("dynamics.init", "uniform_box");
  if (init != "uniform_box" && init != "given")
    throw ConfigError("dynamics.init: expected uniform_box|given, got '" + init + "'");
  if (init == "given" && !c.has("dynamics.init_path"))
    throw ConfigError("dynamics.init = given requires dynamics.init_path");
  cfg.validate();
  return cfg;
}

}  // namespace mpcl::cli
