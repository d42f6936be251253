#pragma once

#include <memory>
#include <string>
#include <vector>

#include "servobench/design_function.hpp"
#include "servobench/kinematics.hpp"

namespace servobench {

/// Per-axis triple used for DF outputs, integrals and initial errors.
struct Axes3 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

/// e = pose - desired, with the angular component as a minimal signed difference.
struct ErrorState3 {
  double ex = 0.0;
  double ey = 0.0;
  double etheta = 0.0;
  Axes3 integral;
  Axes3 e0;
};

/// Fresh error state for a new target: integrals zeroed, e0 = current error.
ErrorState3 make_error_state(const Pose2& pose, const Pose2& desired);

/// Refreshes ex/ey/etheta from the current pose, keeping integrals and e0.
void refresh_error(ErrorState3& state, const Pose2& pose, const Pose2& desired);

struct ControllerConfig {
  DesignFunctionSpec df_x = DesignFunctionSpec::type_iii(4.0, 2.0);
  DesignFunctionSpec df_y = DesignFunctionSpec::type_iii(4.0, 2.0);
  DesignFunctionSpec df_theta = DesignFunctionSpec::type_iii(4.0, 2.0);
  double separation_pos = 0.1;    // m
  double separation_angle = 0.2;  // rad
  Axes3 integral_clamp{0.15, 0.15, 0.5};
};

void validate(const ControllerConfig& config);

/// Anti-windup bound matching what the actuators can express: saturation / ki.
/// Axes without an integral term keep their current clamp.
void set_default_integral_clamp(ControllerConfig& config, double sat_linear, double sat_angular);

/// Integral separation and clamping. An axis accumulates e*dt only while
/// |e| < its separation threshold; every integral is then clamped.
ErrorState3 update_integrals(const ErrorState3& state, const ControllerConfig& config, double dt);

/// Feedback-linearizing coupling: (f1 - y f3, f2 + x f3, -f3).
VelocityCmd feedback_linearize(const Axes3& f, const Pose2& target_in_chassis);

/// Design Function outputs for the current (already integrated) state.
Axes3 evaluate_design_functions(const ErrorState3& state, const ControllerConfig& config);

/// Updates integrals in `state`, evaluates the per-axis DFs and couples them
/// through the chassis model. Returns the raw, pre-nonlinearity command.
VelocityCmd control_law(ErrorState3& state, const Pose2& target_in_chassis,
                        const ControllerConfig& config, double dt);

// ---------------------------------------------------------------------------
// Baselines

struct CommandSegment {
  double start = 0.0;  // s, inclusive
  double end = 0.0;    // s, exclusive
  VelocityCmd cmd;     // value at `start`
  VelocityCmd rate;    // per-second change inside the segment
};

/// Piecewise-linear, time-indexed command schedule; zero outside segments.
struct CommandSchedule {
  std::vector<CommandSegment> segments;

  VelocityCmd at(double t) const;
  bool empty() const { return segments.empty(); }
};

/// Straight-line move that would cancel the initial planar error in an ideal
/// plant. No feedback and no rotation. With accel == 0 the speed steps
/// straight to cruise_speed; otherwise the profile is trapezoidal (or
/// triangular for short moves) with the given ramp acceleration.
CommandSchedule open_loop_plan(const ErrorState3& initial_error, double cruise_speed, double accel = 0.0);

struct PidGains {
  double kp = 1.5;
  double ki = 1.0;
  double kd = 0.0;
  double integral_clamp = 0.3;
};

struct PidState {
  Axes3 integral;
  Axes3 prev_error;
  bool primed = false;
};

/// Independent PID loops on ex and ey. The coupling terms are ignored and the
/// angular channel is held at zero.
VelocityCmd decoupled_pid(const ErrorState3& pose_error, PidState& state, const PidGains& gains, double dt);

// ---------------------------------------------------------------------------
// Stateful policies driven by the plant simulator.

class ServoPolicy {
 public:
  virtual ~ServoPolicy() = default;

  /// Called once before the first tick; `initial` is the starting target pose.
  virtual void reset(const Pose2& initial) = 0;

  /// One controller period. Returns the raw command.
  virtual VelocityCmd tick(double t, const Pose2& target, double dt) = 0;

  virtual const Pose2& desired() const = 0;
  virtual std::string name() const = 0;
};

class FeedbackLinearizingController final : public ServoPolicy {
 public:
  FeedbackLinearizingController(ControllerConfig config, Pose2 desired);

  void reset(const Pose2& initial) override;
  VelocityCmd tick(double t, const Pose2& target, double dt) override;
  const Pose2& desired() const override { return desired_; }
  std::string name() const override;

  const ErrorState3& state() const { return state_; }

 private:
  ControllerConfig config_;
  Pose2 desired_;
  ErrorState3 state_;
};

class OpenLoopController final : public ServoPolicy {
 public:
  OpenLoopController(double cruise_speed, Pose2 desired, double accel = 0.0);

  void reset(const Pose2& initial) override;
  VelocityCmd tick(double t, const Pose2& target, double dt) override;
  const Pose2& desired() const override { return desired_; }
  std::string name() const override { return "Open-loop"; }

  const CommandSchedule& plan() const { return plan_; }

 private:
  double cruise_speed_;
  double accel_;
  Pose2 desired_;
  CommandSchedule plan_;
};

class DecoupledPidController final : public ServoPolicy {
 public:
  DecoupledPidController(PidGains gains, Pose2 desired);

  void reset(const Pose2& initial) override;
  VelocityCmd tick(double t, const Pose2& target, double dt) override;
  const Pose2& desired() const override { return desired_; }
  std::string name() const override { return "PID"; }

 private:
  PidGains gains_;
  Pose2 desired_;
  ErrorState3 error_;
  PidState pid_;
};

}  // namespace servobench
