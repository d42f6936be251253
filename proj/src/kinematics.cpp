#include "servobench/kinematics.hpp"

#include <cmath>
#include <numbers>

#include "servobench/errors.hpp"

namespace servobench {

namespace {

bool finite(const Pose2& p) {
  return std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.theta);
}

bool finite(const VelocityCmd& c) {
  return std::isfinite(c.vx) && std::isfinite(c.vy) && std::isfinite(c.omega);
}

void require_finite(const Pose2& pose, const VelocityCmd& cmd) {
  if (!finite(pose)) throw InvalidArgument("pose has non-finite component");
  if (!finite(cmd)) throw InvalidArgument("velocity command has non-finite component");
}

void check_divergence(const Pose2& p, double t) {
  if (!finite(p) || std::abs(p.x) > kDivergenceBound || std::abs(p.y) > kDivergenceBound) {
    throw SimulationDiverged("state diverged at t=" + std::to_string(t));
  }
}

Pose2 axpy(const Pose2& p, double h, const PoseRate& k) {
  return {p.x + h * k.xdot, p.y + h * k.ydot, p.theta + h * k.thetadot};
}

}  // namespace

double normalize_angle(double a) {
  constexpr double pi = std::numbers::pi;
  a = std::remainder(a, 2.0 * pi);  // [-pi, pi]
  if (a <= -pi) a += 2.0 * pi;
  return a;
}

double angle_diff(double a, double b) { return normalize_angle(a - b); }

Pose2 exact_step(const Pose2& pose, const VelocityCmd& cmd, const StepParams& step) {
  require_finite(pose, cmd);
  if (!(step.dt > 0.0) || !std::isfinite(step.dt)) throw InvalidArgument("step dt must be > 0");

  const double dtheta = cmd.omega * step.dt;
  const double tx = pose.x + cmd.vx * step.dt;
  const double ty = pose.y + cmd.vy * step.dt;
  const double c = std::cos(dtheta);
  const double s = std::sin(dtheta);
  return {c * tx - s * ty, s * tx + c * ty, normalize_angle(pose.theta - dtheta)};
}

PoseRate state_derivative(const Pose2& pose, const VelocityCmd& cmd) {
  require_finite(pose, cmd);
  return {cmd.vx - pose.y * cmd.omega, cmd.vy + pose.x * cmd.omega, -cmd.omega};
}

std::vector<TimedPose> integrate_ode(const Pose2& pose, const CommandSource& cmd,
                                     double horizon, const StepParams& step) {
  if (!(horizon > 0.0)) throw InvalidArgument("horizon must be > 0");
  if (!(step.dt > 0.0) || step.dt > horizon) throw InvalidArgument("step dt must be in (0, horizon]");
  if (!finite(pose)) throw InvalidArgument("pose has non-finite component");

  const double h = step.dt;
  // Guard against horizon/dt landing a hair below an integer.
  const auto n = static_cast<std::size_t>(std::floor(horizon / h + 1e-9));
  std::vector<TimedPose> out;
  out.reserve(n + 1);

  Pose2 p = pose;
  p.theta = normalize_angle(p.theta);
  out.push_back({0.0, p});
  auto rate = [&](double t, const Pose2& q) { return state_derivative(q, cmd(t, q)); };

  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) * h;
    const PoseRate k1 = rate(t, p);
    const PoseRate k2 = rate(t + 0.5 * h, axpy(p, 0.5 * h, k1));
    const PoseRate k3 = rate(t + 0.5 * h, axpy(p, 0.5 * h, k2));
    const PoseRate k4 = rate(t + h, axpy(p, h, k3));
    p.x += h / 6.0 * (k1.xdot + 2.0 * k2.xdot + 2.0 * k3.xdot + k4.xdot);
    p.y += h / 6.0 * (k1.ydot + 2.0 * k2.ydot + 2.0 * k3.ydot + k4.ydot);
    p.theta = normalize_angle(
        p.theta + h / 6.0 * (k1.thetadot + 2.0 * k2.thetadot + 2.0 * k3.thetadot + k4.thetadot));
    const double t_next = static_cast<double>(i + 1) * h;
    check_divergence(p, t_next);
    out.push_back({t_next, p});
  }
  return out;
}

}  // namespace servobench
