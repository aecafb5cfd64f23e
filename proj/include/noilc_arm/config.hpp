#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "noilc_arm/errors.hpp"
#include "noilc_arm/harness.hpp"
#include "noilc_arm/trajectory.hpp"

namespace noilc_arm {

// The subset of TOML the experiment files use: [section] headers, key = value
// with numbers, booleans, double-quoted strings and flat numeric arrays, and
// '#' comments.
struct ConfigValue {
  std::variant<double, bool, std::string, std::vector<double>> value;
  std::size_t line = 0;
};

class ConfigDocument {
 public:
  static ConfigDocument parse(const std::string& text) {
    ConfigDocument doc;
    std::istringstream in(text);
    std::string raw;
    std::string section;
    std::size_t lineno = 0;
    while (std::getline(in, raw)) {
      ++lineno;
      std::string line = trim(strip_comment(raw));
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw ConfigError("", lineno, "unterminated section header");
        section = trim(line.substr(1, line.size() - 2));
        if (section.empty() || !is_bare_key(section))
          throw ConfigError("", lineno, "invalid section name '" + section + "'");
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw ConfigError("", lineno, "expected 'key = value'");
      const std::string key = trim(line.substr(0, eq));
      if (!is_bare_key(key)) throw ConfigError("", lineno, "invalid key '" + key + "'");
      const std::string full = section.empty() ? key : section + "." + key;
      if (doc.values_.count(full)) throw ConfigError(full, lineno, "duplicate key");
      doc.values_[full] = {parse_value(trim(line.substr(eq + 1)), full, lineno), lineno};
    }
    return doc;
  }

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  // Command-line overrides; they take part in the hash like file entries.
  void set(const std::string& key, decltype(ConfigValue::value) v) {
    values_[key] = {std::move(v), 0};
  }
  const std::map<std::string, ConfigValue>& values() const { return values_; }

  double number(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (auto* d = std::get_if<double>(&it->second.value)) return *d;
    throw ConfigError(key, it->second.line, "expected a number");
  }

  bool boolean(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (auto* b = std::get_if<bool>(&it->second.value)) return *b;
    throw ConfigError(key, it->second.line, "expected true or false");
  }

  std::string string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (auto* s = std::get_if<std::string>(&it->second.value)) return *s;
    throw ConfigError(key, it->second.line, "expected a quoted string");
  }

  std::vector<double> array(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError(key, 0, "missing required key");
    if (auto* v = std::get_if<std::vector<double>>(&it->second.value)) return *v;
    throw ConfigError(key, it->second.line, "expected an array of numbers");
  }

  std::size_t line_of(const std::string& key) const {
    auto it = values_.find(key);
    return it == values_.end() ? 0 : it->second.line;
  }

  // Canonical text: one "key=value" line per entry in sorted key order, so it
  // does not depend on how the file orders its sections or keys.
  std::string canonical() const {
    std::string out;
    for (const auto& [key, v] : values_) {
      out += key + "=";
      std::visit(
          [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, double>) {
              out += format_number(x);
            } else if constexpr (std::is_same_v<T, bool>) {
              out += x ? "true" : "false";
            } else if constexpr (std::is_same_v<T, std::string>) {
              out += "\"" + x + "\"";
            } else {
              out += "[";
              for (std::size_t i = 0; i < x.size(); ++i)
                out += (i ? "," : "") + format_number(x[i]);
              out += "]";
            }
          },
          v.value);
      out += "\n";
    }
    return out;
  }

  // FNV-1a 64 of the canonical text, as 16 hex digits.
  std::string hash() const {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : canonical()) {
      h ^= c;
      h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

 private:
  static std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
  }

  static std::string strip_comment(const std::string& s) {
    bool in_str = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) in_str = !in_str;
      if (s[i] == '#' && !in_str) return s.substr(0, i);
    }
    return s;
  }

  static bool is_bare_key(const std::string& k) {
    if (k.empty()) return false;
    for (char c : k)
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.'))
        return false;
    return true;
  }

  static double parse_number(std::string s, const std::string& key, std::size_t line) {
    std::erase(s, '_');
    if (s.empty()) throw ConfigError(key, line, "missing value");
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || !std::isfinite(v))
      throw ConfigError(key, line, "cannot parse '" + s + "' as a number");
    return v;
  }

  static decltype(ConfigValue::value) parse_value(const std::string& s, const std::string& key,
                                                  std::size_t line) {
    if (s.empty()) throw ConfigError(key, line, "missing value");
    if (s == "true") return true;
    if (s == "false") return false;
    if (s.front() == '"') {
      if (s.size() < 2 || s.back() != '"') throw ConfigError(key, line, "unterminated string");
      std::string out;
      for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        if (s[i] == '\\' && i + 2 < s.size()) {
          const char n = s[++i];
          out += n == 'n' ? '\n' : n == 't' ? '\t' : n;
        } else {
          out += s[i];
        }
      }
      return out;
    }
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(key, line, "unterminated array");
      std::vector<double> out;
      std::string body = trim(s.substr(1, s.size() - 2));
      if (body.empty()) return out;
      std::istringstream items(body);
      std::string item;
      while (std::getline(items, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;  // trailing comma
        out.push_back(parse_number(item, key, line));
      }
      return out;
    }
    return parse_number(s, key, line);
  }

  std::map<std::string, ConfigValue> values_;
};

namespace detail {

inline const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys = {
      "experiment.plant", "experiment.iterations", "experiment.learning", "experiment.seed",
      "rates.inner_hz", "rates.outer_hz", "rates.pwm_hz",
      "weights.m", "weights.s", "weights.w", "weights.difference",
      "feedback.enabled", "feedback.k_ff", "feedback.k_p", "feedback.k_i", "feedback.k_d",
      "feedback.windup_limit",
      "pneumatics.R", "pneumatics.T", "pneumatics.volume", "pneumatics.p0", "pneumatics.p_src",
      "pneumatics.p_max", "pneumatics.tau_p", "pneumatics.filter", "pneumatics.filter_window",
      "pneumatics.substeps",
      "valve.c_flow", "valve.b_crit", "valve.dc_min", "valve.n_parallel",
      "coupling.enabled", "coupling.gamma", "coupling.alpha_range_deg",
      "arm.kappa", "arm.omega0", "arm.delta",
      "normalization.angle_scale", "normalization.rate_scale", "normalization.input_scale",
      "trajectory.kind", "trajectory.waypoints_t", "trajectory.waypoints_deg",
      "trajectory.a_max_deg", "trajectory.v_max_deg", "trajectory.move_time",
      "trajectory.move_deg", "trajectory.duration", "trajectory.csv",
      "measurement.quantize", "measurement.quantum_deg", "measurement.noise_std_deg",
      "disturbance.kind", "disturbance.amp_deg",
      "pd_ilc.kp", "pd_ilc.kd", "pd_ilc.q_cutoff_hz"};
  return keys;
}

template <typename E>
E pick(const ConfigDocument& doc, const std::string& key, const std::string& fallback,
       const std::map<std::string, E>& options) {
  const std::string v = doc.string(key, fallback);
  auto it = options.find(v);
  if (it == options.end()) {
    std::string allowed;
    for (const auto& [name, _] : options) allowed += (allowed.empty() ? "" : ", ") + name;
    throw ConfigError(key, doc.line_of(key), "unknown value '" + v + "' (expected " + allowed + ")");
  }
  return it->second;
}

inline std::size_t count(const ConfigDocument& doc, const std::string& key, std::size_t fallback) {
  const double v = doc.number(key, static_cast<double>(fallback));
  if (v < 0.0 || v != std::floor(v))
    throw ConfigError(key, doc.line_of(key), "expected a non-negative integer");
  return static_cast<std::size_t>(v);
}

}  // namespace detail

// Builds an ExperimentConfig from a parsed document; keys not present keep
// their defaults. Relative trajectory CSV paths resolve against base_dir.
inline ExperimentConfig config_from_document(const ConfigDocument& doc,
                                             const std::filesystem::path& base_dir = {}) {
  for (const auto& [key, v] : doc.values())
    if (!detail::known_config_keys().count(key))
      throw ConfigError(key, v.line, "unknown key");

  ExperimentConfig c;
  c.plant_kind = detail::pick<PlantKind>(
      doc, "experiment.plant", "pneumatic",
      {{"pneumatic", PlantKind::kPneumatic}, {"nominal", PlantKind::kNominal}});
  c.learning = detail::pick<LearningKind>(doc, "experiment.learning", "noilc",
                                          {{"noilc", LearningKind::kNoilc},
                                           {"pd-ilc", LearningKind::kPdIlc},
                                           {"none", LearningKind::kNone}});
  c.iterations = detail::count(doc, "experiment.iterations", c.iterations);
  c.seed = detail::count(doc, "experiment.seed", c.seed);

  c.inner_hz = doc.number("rates.inner_hz", c.inner_hz);
  c.outer_hz = doc.number("rates.outer_hz", c.outer_hz);
  c.pwm_hz = doc.number("rates.pwm_hz", c.pwm_hz);

  c.weight_m = doc.number("weights.m", c.weight_m);
  c.weight_s = doc.number("weights.s", c.weight_s);
  c.weight_w = doc.number("weights.w", c.weight_w);
  c.difference = detail::pick<DifferenceKind>(
      doc, "weights.difference", "square",
      {{"square", DifferenceKind::kSquare}, {"reduced", DifferenceKind::kReduced}});

  // nominal plant defaults to open loop
  c.feedback_enabled = doc.boolean("feedback.enabled", c.plant_kind == PlantKind::kPneumatic);
  c.gains.k_ff = doc.number("feedback.k_ff", c.gains.k_ff);
  c.gains.k_p = doc.number("feedback.k_p", c.gains.k_p);
  c.gains.k_i = doc.number("feedback.k_i", c.gains.k_i);
  c.gains.k_d = doc.number("feedback.k_d", c.gains.k_d);
  c.gains.windup_limit = doc.number("feedback.windup_limit", c.gains.windup_limit);

  auto& pc = c.plant.consts;
  pc.R = doc.number("pneumatics.R", pc.R);
  pc.T = doc.number("pneumatics.T", pc.T);
  pc.V = doc.number("pneumatics.volume", pc.V);
  pc.p0 = doc.number("pneumatics.p0", pc.p0);
  pc.p_src = doc.number("pneumatics.p_src", pc.p_src);
  pc.p_max = doc.number("pneumatics.p_max", pc.p_max);
  pc.tau_p = doc.number("pneumatics.tau_p", pc.tau_p);
  c.pressure_filter = doc.boolean("pneumatics.filter", c.pressure_filter);
  c.filter_window = detail::count(doc, "pneumatics.filter_window", c.filter_window);
  c.plant.substeps = static_cast<int>(
      detail::count(doc, "pneumatics.substeps", static_cast<std::size_t>(c.plant.substeps)));

  auto& vp = c.plant.valve;
  vp.c_flow = doc.number("valve.c_flow", vp.c_flow);
  vp.b_crit = doc.number("valve.b_crit", vp.b_crit);
  vp.dc_min = doc.number("valve.dc_min", vp.dc_min);
  vp.n_parallel = static_cast<int>(
      detail::count(doc, "valve.n_parallel", static_cast<std::size_t>(vp.n_parallel)));

  auto& cp = c.plant.coupling;
  cp.enabled = doc.boolean("coupling.enabled", cp.enabled);
  cp.gamma = doc.number("coupling.gamma", cp.gamma);
  cp.alpha_range = deg2rad(doc.number("coupling.alpha_range_deg", rad2deg(cp.alpha_range)));

  c.plant.arm.kappa = doc.number("arm.kappa", c.plant.arm.kappa);
  c.plant.arm.omega0 = doc.number("arm.omega0", c.plant.arm.omega0);
  c.plant.arm.delta = doc.number("arm.delta", c.plant.arm.delta);

  c.norms.angle_scale = doc.number("normalization.angle_scale", c.norms.angle_scale);
  c.norms.rate_scale = doc.number("normalization.rate_scale", c.norms.rate_scale);
  c.norms.input_scale = doc.number("normalization.input_scale", c.norms.input_scale);

  const std::string kind = doc.string("trajectory.kind", "paper");
  if (kind == "paper") {
    c.trajectory = paper_reference_spec(c.T_ilc());
  } else if (kind == "trapezoid") {
    const auto ts = doc.array("trajectory.waypoints_t");
    const auto deg = doc.array("trajectory.waypoints_deg");
    if (ts.size() != deg.size() || ts.empty())
      throw ConfigError("trajectory.waypoints_deg", doc.line_of("trajectory.waypoints_deg"),
                        "needs as many entries as trajectory.waypoints_t (at least one)");
    TrapezoidSpec spec;
    for (std::size_t i = 0; i < ts.size(); ++i) spec.waypoints.push_back({ts[i], deg2rad(deg[i])});
    spec.a_max = deg2rad(doc.number("trajectory.a_max_deg", 12000.0));
    if (doc.has("trajectory.v_max_deg")) {
      spec.v_max = deg2rad(doc.number("trajectory.v_max_deg", 0.0));
    } else {
      const double move = deg2rad(doc.number("trajectory.move_deg", 60.0));
      const double t = doc.number("trajectory.move_time", 0.2);
      try {
        spec.v_max = vmax_for_move_time(move, spec.a_max, t);
      } catch (const InputError& e) {
        throw ConfigError("trajectory.move_time", doc.line_of("trajectory.move_time"), e.what());
      }
    }
    spec.Ts = c.T_ilc();
    spec.duration = doc.number("trajectory.duration", 8.0);
    c.trajectory = spec;
  } else if (kind == "csv") {
    std::filesystem::path p = doc.string("trajectory.csv", "");
    if (p.empty()) throw ConfigError("trajectory.csv", 0, "missing required key");
    if (p.is_relative()) p = base_dir / p;
    try {
      c.custom_reference = read_trajectory_csv(p.string());
    } catch (const Error& e) {
      throw ConfigError("trajectory.csv", doc.line_of("trajectory.csv"), e.what());
    }
  } else {
    throw ConfigError("trajectory.kind", doc.line_of("trajectory.kind"),
                      "unknown value '" + kind + "' (expected paper, trapezoid, csv)");
  }

  c.quantize = doc.boolean("measurement.quantize", c.quantize);
  c.quantum = deg2rad(doc.number("measurement.quantum_deg", 0.1));
  c.noise_std = deg2rad(doc.number("measurement.noise_std_deg", 0.0));

  c.disturbance = detail::pick<DisturbanceKind>(
      doc, "disturbance.kind", "none",
      {{"none", DisturbanceKind::kNone}, {"fixed", DisturbanceKind::kFixed}});
  c.disturbance_amp = deg2rad(doc.number("disturbance.amp_deg", 5.0));

  c.pd_ilc.kp = doc.number("pd_ilc.kp", c.pd_ilc.kp);
  c.pd_ilc.kd = doc.number("pd_ilc.kd", c.pd_ilc.kd);
  c.pd_ilc.q_cutoff_hz = doc.number("pd_ilc.q_cutoff_hz", c.pd_ilc.q_cutoff_hz);

  try {
    c.validate();
  } catch (const ConfigError& e) {
    if (e.line() != 0) throw;
    const std::string& f = e.field();
    const std::size_t line = doc.has(f) ? doc.line_of(f) : doc.line_of(f + ".kind");
    if (line == 0) throw;
    throw ConfigError(f, line, e.message());
  }
  return c;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("", 0, "cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct LoadedConfig {
  ExperimentConfig config;
  ConfigDocument document;
};

inline LoadedConfig load_config(const std::filesystem::path& path) {
  ConfigDocument doc = ConfigDocument::parse(read_text_file(path));
  ExperimentConfig cfg = config_from_document(doc, path.parent_path());
  return {std::move(cfg), std::move(doc)};
}

}  // namespace noilc_arm
