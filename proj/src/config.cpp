#include "servobench/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "servobench/errors.hpp"

namespace servobench {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

bool parse_number(const std::string& s, double& out) {
  try {
    std::size_t pos = 0;
    out = std::stod(s, &pos);
    return pos == s.size();
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

ConfigError::ConfigError(const std::string& field, int line, const std::string& what)
    : std::runtime_error((line > 0 ? "line " + std::to_string(line) + ": " : std::string()) +
                         (field.empty() ? std::string() : field + ": ") + what),
      field_(field),
      line_(line) {}

ConfigFile ConfigFile::parse(const std::string& text, const std::string& origin) {
  ConfigFile cfg;
  cfg.origin_ = origin;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3) throw ConfigError("", line, "malformed section header '" + s + "'");
      section = trim(s.substr(1, s.size() - 2));
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("", line, "expected key = value, got '" + s + "'");
    const std::string key = trim(s.substr(0, eq));
    if (key.empty()) throw ConfigError("", line, "empty key");
    const std::string full = section.empty() ? key : section + "." + key;
    if (cfg.entries_.count(full)) throw ConfigError(full, line, "duplicate key");
    cfg.entries_[full] = {trim(s.substr(eq + 1)), line};
  }
  return cfg;
}

ConfigFile ConfigFile::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", 0, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

const ConfigFile::Entry* ConfigFile::find(const std::string& key) const {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return nullptr;
  it->second.used = true;
  return &it->second;
}

bool ConfigFile::has(const std::string& key) const { return entries_.count(key) != 0; }

int ConfigFile::line_of(const std::string& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? 0 : it->second.line;
}

std::string ConfigFile::get_string(const std::string& key, const std::string& fallback) const {
  const Entry* e = find(key);
  return e ? e->value : fallback;
}

double ConfigFile::get_double(const std::string& key, double fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  double v = 0.0;
  if (!parse_number(e->value, v)) throw ConfigError(key, e->line, "expected a number, got '" + e->value + "'");
  return v;
}

std::uint64_t ConfigFile::get_u64(const std::string& key, std::uint64_t fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  try {
    std::size_t pos = 0;
    if (!e->value.empty() && e->value.front() == '-') throw std::invalid_argument("negative");
    const auto v = std::stoull(e->value, &pos);
    if (pos != e->value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError(key, e->line, "expected a non-negative integer, got '" + e->value + "'");
  }
}

std::vector<double> ConfigFile::get_list(const std::string& key, const std::vector<double>& fallback) const {
  const Entry* e = find(key);
  if (!e) return fallback;
  std::vector<double> out;
  for (const std::string& w : split_list(e->value)) {
    double v = 0.0;
    if (!parse_number(w, v)) throw ConfigError(key, e->line, "expected a number list, got '" + w + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> ConfigFile::get_words(const std::string& key,
                                               const std::vector<std::string>& fallback) const {
  const Entry* e = find(key);
  return e ? split_list(e->value) : fallback;
}

void ConfigFile::reject_unused() const {
  for (const auto& [key, e] : entries_) {
    if (!e.used) throw ConfigError(key, e.line, "unknown key");
  }
}

std::string fmt9(double v) {
  if (v == 0.0) v = 0.0;  // drop negative zero
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

// ---------------------------------------------------------------------------

namespace {

DfType df_type_at(const ConfigFile& f, const std::string& key, DfType fallback) {
  if (!f.has(key)) return fallback;
  const std::string s = f.get_string(key, "");
  const auto t = parse_df_type(s);
  if (!t) throw ConfigError(key, f.line_of(key), "unknown design function type '" + s + "'");
  return *t;
}

DesignFunctionSpec read_df(const ConfigFile& f, const std::string& prefix, const DesignFunctionSpec& base) {
  DesignFunctionSpec d = base;
  d.type = df_type_at(f, prefix + "type", base.type);
  d.kp = f.get_double(prefix + "kp", base.kp);
  d.ki = f.get_double(prefix + "ki", base.ki);
  d.alpha = f.get_double(prefix + "alpha", base.alpha);
  return d;
}

// Runs `fn`, turning InvalidArgument into a ConfigError attributed to `key`.
template <class Fn>
void check(const ConfigFile& f, const std::string& key, Fn&& fn) {
  try {
    fn();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key, f.line_of(key), e.what());
  }
}

// Validates a DF spec, naming the gain that fails. Per-axis keys win over the
// shared "controller." key when both could have supplied the value.
void check_df(const ConfigFile& f, const std::vector<std::string>& prefixes, const DesignFunctionSpec& d) {
  auto key_for = [&](const std::string& name) {
    for (const std::string& p : prefixes)
      if (f.has(p + name)) return p + name;
    return prefixes.back() + name;
  };
  check(f, key_for("kp"), [&] { validate(DesignFunctionSpec::type_i(d.kp)); });
  const char* extra = d.type == DfType::TypeII ? "alpha" : d.type == DfType::TypeIII ? "ki" : "type";
  check(f, key_for(extra), [&] { validate(d); });
}

Pose2 read_pose(const ConfigFile& f, const std::string& section, const Pose2& base) {
  return {f.get_double(section + ".x", base.x), f.get_double(section + ".y", base.y),
          f.get_double(section + ".theta", base.theta)};
}

}  // namespace

ScenarioConfig load_scenario(const ConfigFile& f) {
  ScenarioConfig c;
  c.name = f.get_string("scenario.name", c.name);
  c.env = f.get_string("scenario.env", c.env);
  const std::string method = f.get_string("scenario.method", "feedback");
  if (method == "feedback") c.method = Method::FeedbackLinearized;
  else if (method == "openloop") c.method = Method::OpenLoop;
  else if (method == "pid") c.method = Method::DecoupledPid;
  else throw ConfigError("scenario.method", f.line_of("scenario.method"), "expected feedback|openloop|pid");
  c.timeout = f.get_double("scenario.timeout", c.timeout);
  c.seed = f.get_u64("scenario.seed", c.seed);

  // Controller: a shared DF spec with optional per-axis overrides.
  const DesignFunctionSpec shared = read_df(f, "controller.", c.controller.df_x);
  c.controller.df_x = read_df(f, "controller.x.", shared);
  c.controller.df_y = read_df(f, "controller.y.", shared);
  c.controller.df_theta = read_df(f, "controller.theta.", shared);
  c.controller.separation_pos = f.get_double("controller.separation_pos", c.controller.separation_pos);
  c.controller.separation_angle = f.get_double("controller.separation_angle", c.controller.separation_angle);
  if (f.has("controller.integral_clamp") && f.get_string("controller.integral_clamp", "") != "auto") {
    const double v = f.get_double("controller.integral_clamp", 0.0);
    c.controller.integral_clamp = {v, v, f.get_double("controller.integral_clamp_angular", v)};
    c.auto_integral_clamp = false;
  }

  c.cruise_speed = f.get_double("baseline.cruise_speed", c.cruise_speed);
  c.ramp_accel = f.get_double("baseline.ramp_accel", c.ramp_accel);
  c.pid.kp = f.get_double("baseline.pid_kp", c.pid.kp);
  c.pid.ki = f.get_double("baseline.pid_ki", c.pid.ki);
  c.pid.kd = f.get_double("baseline.pid_kd", c.pid.kd);
  c.pid.integral_clamp = f.get_double("baseline.pid_integral_clamp", c.pid.integral_clamp);

  NonlinearityConfig& nl = c.nonlinearity;
  nl.dead_zone_linear = f.get_double("nonlinearity.dead_zone", nl.dead_zone_linear);
  nl.dead_zone_angular = f.get_double("nonlinearity.dead_zone_angular", nl.dead_zone_angular);
  nl.saturation_linear = f.get_double("nonlinearity.saturation", nl.saturation_linear);
  nl.saturation_angular = f.get_double("nonlinearity.saturation_angular", nl.saturation_angular);
  nl.delay_tau = f.get_double("nonlinearity.delay", nl.delay_tau);

  c.initial = read_pose(f, "initial", c.initial);
  c.desired = read_pose(f, "desired", c.desired);

  c.termination.pos_tolerance = f.get_double("termination.pos_tolerance", c.termination.pos_tolerance);
  c.termination.angle_tolerance = f.get_double("termination.angle_tolerance", c.termination.angle_tolerance);
  c.termination.dwell = f.get_double("termination.dwell", c.termination.dwell);

  c.sim.plant_dt = f.get_double("sim.plant_dt", c.sim.plant_dt);
  c.sim.control_period = f.get_double("sim.control_period", c.sim.control_period);

  const bool any_sweep = f.has("sweep.taus") || f.has("sweep.dead_zones") || f.has("sweep.types");
  if (any_sweep) {
    SweepGrid g;
    g.taus = f.get_list("sweep.taus", {});
    g.dead_zones = f.get_list("sweep.dead_zones", {});
    for (const std::string& w : f.get_words("sweep.types", {})) {
      const auto t = parse_df_type(w);
      if (!t) throw ConfigError("sweep.types", f.line_of("sweep.types"), "unknown design function type '" + w + "'");
      const std::string prefix = "sweep." + std::string(to_string(*t)) + ".";
      DesignFunctionSpec base{*t, 1.0, 0.0, 2.0 / 3.0};
      if (*t == DfType::TypeIII) base = DesignFunctionSpec::type_iii(4.0, 2.0);
      DesignFunctionSpec d = base;
      d.kp = f.get_double(prefix + "kp", base.kp);
      d.ki = f.get_double(prefix + "ki", base.ki);
      d.alpha = f.get_double(prefix + "alpha", base.alpha);
      check_df(f, {prefix}, d);
      g.dfs.push_back(d);
    }
    g.e0 = f.get_double("sweep.e0", g.e0);
    g.horizon = f.get_double("sweep.horizon", g.horizon);
    g.saturation = f.get_double("sweep.saturation", g.saturation);
    g.dead_zone_angular = f.get_double("sweep.dead_zone_angular", g.dead_zone_angular);
    g.separation_pos = f.get_double("sweep.separation_pos", g.separation_pos);
    g.window_fraction = f.get_double("sweep.window_fraction", g.window_fraction);
    g.settings = c.sim;
    if (g.taus.empty()) throw ConfigError("sweep.taus", f.line_of("sweep.taus"), "grid must be non-empty");
    if (g.dead_zones.empty()) {
      throw ConfigError("sweep.dead_zones", f.line_of("sweep.dead_zones"), "grid must be non-empty");
    }
    if (g.dfs.empty()) throw ConfigError("sweep.types", f.line_of("sweep.types"), "grid must be non-empty");
    for (double tau : g.taus) {
      if (!(tau >= 0.0)) throw ConfigError("sweep.taus", f.line_of("sweep.taus"), "delay must be >= 0");
    }
    for (double m : g.dead_zones) {
      if (!(m >= 0.0 && m < g.saturation)) {
        throw ConfigError("sweep.dead_zones", f.line_of("sweep.dead_zones"), "dead zone must lie in [0, saturation)");
      }
    }
    if (!(g.horizon > 0.0)) throw ConfigError("sweep.horizon", f.line_of("sweep.horizon"), "must be > 0");
    if (!(g.window_fraction > 0.0 && g.window_fraction <= 1.0)) {
      throw ConfigError("sweep.window_fraction", f.line_of("sweep.window_fraction"), "must lie in (0, 1]");
    }
    c.sweep = g;
  }
  c.requirement = f.get_double("sweep.requirement", c.requirement);
  c.margin = f.get_double("sweep.margin", c.margin);

  c.filter_a = f.get_double("filter.a", c.filter_a);
  c.max_hold = static_cast<std::size_t>(f.get_u64("filter.max_hold", c.max_hold));
  c.synth.true_pose = {f.get_double("filter.x", 1.0), f.get_double("filter.y", 0.0),
                       f.get_double("filter.theta", 0.0)};
  c.synth.sigma_pos = f.get_double("filter.sigma_pos", c.synth.sigma_pos);
  c.synth.sigma_att = f.get_double("filter.sigma_att", c.synth.sigma_att);
  c.synth.dropout = f.get_double("filter.dropout", c.synth.dropout);
  c.synth.length = static_cast<std::size_t>(f.get_u64("filter.length", c.synth.length));

  f.reject_unused();

  // Validation against the owning modules' invariants.
  check_df(f, {"controller.x.", "controller."}, c.controller.df_x);
  check_df(f, {"controller.y.", "controller."}, c.controller.df_y);
  check_df(f, {"controller.theta.", "controller."}, c.controller.df_theta);
  check(f, "nonlinearity.dead_zone", [&] { validate(c.nonlinearity); });
  if (c.auto_integral_clamp) {
    set_default_integral_clamp(c.controller, c.nonlinearity.saturation_linear, c.nonlinearity.saturation_angular);
  }
  check(f, "controller.separation_pos", [&] { validate(c.controller); });
  check(f, "termination.pos_tolerance", [&] { validate(c.termination); });
  check(f, "sim.plant_dt", [&] { validate(c.sim); });
  if (!(c.timeout > c.termination.dwell)) {
    throw ConfigError("scenario.timeout", f.line_of("scenario.timeout"), "timeout must exceed the dwell window");
  }
  if (c.method == Method::OpenLoop && !(c.cruise_speed > 0.0)) {
    throw ConfigError("baseline.cruise_speed", f.line_of("baseline.cruise_speed"), "cruise speed must be > 0");
  }
  if (!(c.ramp_accel >= 0.0)) {
    throw ConfigError("baseline.ramp_accel", f.line_of("baseline.ramp_accel"), "ramp acceleration must be >= 0");
  }
  if (!(c.filter_a >= 0.0 && c.filter_a <= 1.0)) {
    throw ConfigError("filter.a", f.line_of("filter.a"), "filter coefficient must lie in [0, 1]");
  }
  if (!(c.synth.dropout >= 0.0 && c.synth.dropout <= 1.0)) {
    throw ConfigError("filter.dropout", f.line_of("filter.dropout"), "probability must lie in [0, 1]");
  }
  c.synth.seed = c.seed;
  return c;
}

ScenarioConfig load_scenario(const std::filesystem::path& path) { return load_scenario(ConfigFile::load(path)); }

std::unique_ptr<ServoPolicy> make_policy(const ScenarioConfig& c) {
  switch (c.method) {
    case Method::FeedbackLinearized:
      return std::make_unique<FeedbackLinearizingController>(c.controller, c.desired);
    case Method::OpenLoop:
      return std::make_unique<OpenLoopController>(c.cruise_speed, c.desired, c.ramp_accel);
    case Method::DecoupledPid:
      return std::make_unique<DecoupledPidController>(c.pid, c.desired);
  }
  return nullptr;
}

}  // namespace servobench
