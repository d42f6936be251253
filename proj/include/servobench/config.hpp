#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "servobench/perception.hpp"
#include "servobench/plant_sim.hpp"
#include "servobench/servo_controller.hpp"

namespace servobench {

/// Parse or validation failure, carrying the offending field and line.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, int line, const std::string& what);

  const std::string& field() const { return field_; }
  int line() const { return line_; }

 private:
  std::string field_;
  int line_;
};

/// Flat sectioned key=value text with '#' comments:
///
///   [section]
///   key = value   # comment
///
/// Keys are addressed as "section.key". Every lookup marks the key used so
/// unknown keys can be reported.
class ConfigFile {
 public:
  static ConfigFile parse(const std::string& text, const std::string& origin = "<config>");
  static ConfigFile load(const std::filesystem::path& path);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<std::string> get_words(const std::string& key, const std::vector<std::string>& fallback) const;

  /// Line of a key, or 0 when absent.
  int line_of(const std::string& key) const;

  /// Throws ConfigError naming the first key no getter asked for.
  void reject_unused() const;

 private:
  struct Entry {
    std::string value;
    int line = 0;
    mutable bool used = false;
  };
  const Entry* find(const std::string& key) const;

  std::string origin_;
  std::map<std::string, Entry> entries_;
};

/// Formats with 9 significant digits (printf "%.9g").
std::string fmt9(double v);

enum class Method { FeedbackLinearized, OpenLoop, DecoupledPid };

struct ScenarioConfig {
  std::string name = "scenario";
  std::string env = "sim";
  Method method = Method::FeedbackLinearized;
  ControllerConfig controller;
  bool auto_integral_clamp = true;
  double cruise_speed = 0.15;
  double ramp_accel = 0.0;
  PidGains pid;
  NonlinearityConfig nonlinearity;
  Pose2 initial{0.5, 0.3, 0.4};
  Pose2 desired{};
  TerminationSpec termination;
  double timeout = 30.0;
  SimSettings sim;
  std::uint64_t seed = 1;

  // Present only when the file has a [sweep] section.
  std::optional<SweepGrid> sweep;
  double requirement = 0.01;  // m, sub-centimeter target
  double margin = 0.005;      // m

  // [filter] section (synthetic stream experiment).
  SynthParams synth;
  double filter_a = 0.8;
  std::size_t max_hold = 15;
};

/// Builds and validates a scenario. Every field is checked against the owning
/// module's invariants; the first violation raises ConfigError.
ScenarioConfig load_scenario(const ConfigFile& file);
ScenarioConfig load_scenario(const std::filesystem::path& path);

/// Constructs the policy selected by `method`.
std::unique_ptr<ServoPolicy> make_policy(const ScenarioConfig& config);

}  // namespace servobench
