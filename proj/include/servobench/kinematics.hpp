#pragma once

#include <functional>
#include <vector>

namespace servobench {

/// Planar pose of the target expressed in the chassis frame.
struct Pose2 {
  double x = 0.0;      // m
  double y = 0.0;      // m
  double theta = 0.0;  // rad, (-pi, pi]
};

/// Body-frame chassis velocity input.
struct VelocityCmd {
  double vx = 0.0;     // m/s
  double vy = 0.0;     // m/s
  double omega = 0.0;  // rad/s
};

struct StepParams {
  double dt = 0.001;  // s
};

struct PoseRate {
  double xdot = 0.0;
  double ydot = 0.0;
  double thetadot = 0.0;
};

struct TimedPose {
  double t = 0.0;
  Pose2 pose;
};

/// Wraps an angle into (-pi, pi].
double normalize_angle(double a);

/// Minimal signed difference a - b, in (-pi, pi].
double angle_diff(double a, double b);

/// One finite step of the marginal motion model: translate by v*dt, then
/// rotate the position by the step angle and decrement theta by omega*dt.
/// The rotation sense is the one whose dt -> 0 limit is state_derivative().
Pose2 exact_step(const Pose2& pose, const VelocityCmd& cmd, const StepParams& step);

/// Continuous model: (vx - y*omega, vy + x*omega, -omega).
PoseRate state_derivative(const Pose2& pose, const VelocityCmd& cmd);

/// Command source for integrate_ode. Receives the stage time and stage pose so
/// both open-loop schedules and state feedback can be expressed.
using CommandSource = std::function<VelocityCmd(double t, const Pose2& pose)>;

/// Fixed-step RK4 integration of state_derivative(). Returns
/// floor(horizon/dt) + 1 samples starting at t = 0.
std::vector<TimedPose> integrate_ode(const Pose2& pose, const CommandSource& cmd,
                                     double horizon, const StepParams& step);

inline constexpr double kDivergenceBound = 1e6;

}  // namespace servobench
