#pragma once

#include <cstddef>
#include <deque>
#include <limits>
#include <optional>
#include <vector>

#include "servobench/design_function.hpp"
#include "servobench/kinematics.hpp"
#include "servobench/servo_controller.hpp"

namespace servobench {

inline constexpr double kNoLimit = std::numeric_limits<double>::infinity();

/// Actuation discrepancies injected between controller and chassis.
/// Linear values apply to vx and vy independently, angular ones to omega.
struct NonlinearityConfig {
  double dead_zone_linear = 0.0;    // m/s
  double dead_zone_angular = 0.0;   // rad/s
  double saturation_linear = kNoLimit;   // m/s
  double saturation_angular = kNoLimit;  // rad/s
  double delay_tau = 0.0;           // s

  static NonlinearityConfig none() { return {}; }
};

void validate(const NonlinearityConfig& config);

struct TerminationSpec {
  double pos_tolerance = 0.015;   // m, per axis
  double angle_tolerance = 0.05;  // rad
  double dwell = 2.0;             // s
};

void validate(const TerminationSpec& spec);

struct SimSettings {
  double plant_dt = 0.001;         // s
  double control_period = 0.01;    // s
};

void validate(const SimSettings& settings);

struct TrajectorySample {
  double t = 0.0;
  double ex = 0.0;
  double ey = 0.0;
  double etheta = 0.0;
  VelocityCmd raw;       // controller output
  VelocityCmd actuated;  // what the chassis applies at t (after every nonlinearity)
};

struct ServoRunResult {
  Axes3 final_error;                    // m, m, rad
  std::optional<double> aligning_time;  // empty means Timeout
  bool aligned = false;
  double end_time = 0.0;
  std::vector<TrajectorySample> trajectory;  // one row per controller tick

  double final_x_cm() const { return final_error.x * 100.0; }
  double final_y_cm() const { return final_error.y * 100.0; }
  double final_theta_deg() const;
};

/// Hard dead zone: 0 when |v| <= m, v otherwise.
double apply_dead_zone(double v, double m);
VelocityCmd apply_dead_zone(const VelocityCmd& v, const NonlinearityConfig& nl);

/// Symmetric clamp to [-limit, limit].
double apply_saturation(double v, double limit);
VelocityCmd apply_saturation(const VelocityCmd& v, const NonlinearityConfig& nl);

/// Saturation then dead zone, the order used by the simulator.
VelocityCmd actuate(const VelocityCmd& raw, const NonlinearityConfig& nl);

/// Delay in whole plant steps: round(tau / dt).
std::size_t quantize_delay(double tau, double plant_dt);

/// Fixed transport delay over a per-plant-step command stream. The output is
/// zero until the first command has travelled through the line.
class DelayLine {
 public:
  explicit DelayLine(std::size_t steps) : steps_(steps) {}
  DelayLine(double tau, double plant_dt) : DelayLine(quantize_delay(tau, plant_dt)) {}

  VelocityCmd push(const VelocityCmd& cmd);
  std::size_t steps() const { return steps_; }

 private:
  std::size_t steps_;
  std::deque<VelocityCmd> buffer_;
};

/// Stream form of DelayLine, one entry per plant step.
std::vector<VelocityCmd> delayed(const std::vector<VelocityCmd>& stream, double tau, double plant_dt);

/// Closed loop: controller (zero-order hold between ticks) -> saturation ->
/// dead zone -> delay -> exact_step plant. With a termination spec the run
/// stops once the error has stayed inside tolerance for the dwell time;
/// otherwise it runs to `horizon`.
ServoRunResult simulate(const Pose2& initial, ServoPolicy& policy, const NonlinearityConfig& nl,
                        const std::optional<TerminationSpec>& term, double horizon,
                        const SimSettings& settings = {});

/// Evaluation protocol run: terminates on the judge or at `timeout`.
ServoRunResult run_servo(const Pose2& initial, ServoPolicy& policy, const NonlinearityConfig& nl,
                         const TerminationSpec& term, double timeout, const SimSettings& settings = {});

/// Mean |e| over the final `window_fraction` of a trajectory's span.
double measured_steady_state(const std::vector<TrajectorySample>& trajectory, double window_fraction = 0.2);

/// True when every error component lies inside the tolerances.
bool within_tolerance(double ex, double ey, double etheta, const TerminationSpec& term);

// ---------------------------------------------------------------------------
// Dead zone / delay sweep over scalar regulation runs.

struct SweepGrid {
  std::vector<double> taus;
  std::vector<double> dead_zones;
  std::vector<DesignFunctionSpec> dfs;
  double e0 = 0.5;               // m
  double horizon = 20.0;         // s
  double saturation = 0.3;       // m/s
  double dead_zone_angular = 0.05;
  double separation_pos = 0.1;   // m
  double window_fraction = 0.2;
  SimSettings settings;
};

struct SweepCell {
  std::size_t run_id = 0;
  DesignFunctionSpec df;
  double tau = 0.0;
  double dead_zone = 0.0;
  double measured_ess = 0.0;
  double analytic_ess = 0.0;
  std::vector<TrajectorySample> trajectory;
};

/// One run per (df, tau, m), ordered df-major then tau then m. Runs are
/// dispatched to `threads` workers (0 = hardware concurrency); output order
/// does not depend on scheduling.
std::vector<SweepCell> sweep_fig6(const SweepGrid& grid, unsigned threads = 1);

}  // namespace servobench
