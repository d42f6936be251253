#include "servobench/servo_controller.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "servobench/errors.hpp"

namespace servobench {

namespace {

double accumulate(double integral, double e, double threshold, double clamp, double dt) {
  if (std::abs(e) < threshold) integral += e * dt;
  return std::clamp(integral, -clamp, clamp);
}

}  // namespace

ErrorState3 make_error_state(const Pose2& pose, const Pose2& desired) {
  ErrorState3 s;
  refresh_error(s, pose, desired);
  s.e0 = {s.ex, s.ey, s.etheta};
  return s;
}

void refresh_error(ErrorState3& state, const Pose2& pose, const Pose2& desired) {
  state.ex = pose.x - desired.x;
  state.ey = pose.y - desired.y;
  state.etheta = angle_diff(pose.theta, desired.theta);
}

void validate(const ControllerConfig& config) {
  validate(config.df_x);
  validate(config.df_y);
  validate(config.df_theta);
  if (!(config.separation_pos > 0.0)) throw InvalidArgument("integral separation threshold must be > 0");
  if (!(config.separation_angle > 0.0)) throw InvalidArgument("angular integral separation threshold must be > 0");
  const Axes3& c = config.integral_clamp;
  if (!(c.x >= 0.0 && c.y >= 0.0 && c.theta >= 0.0)) throw InvalidArgument("integral clamp must be >= 0");
}

void set_default_integral_clamp(ControllerConfig& config, double sat_linear, double sat_angular) {
  auto pick = [](const DesignFunctionSpec& df, double sat, double current) {
    return df.type == DfType::TypeIII ? sat / df.ki : current;
  };
  config.integral_clamp = {pick(config.df_x, sat_linear, config.integral_clamp.x),
                           pick(config.df_y, sat_linear, config.integral_clamp.y),
                           pick(config.df_theta, sat_angular, config.integral_clamp.theta)};
}

ErrorState3 update_integrals(const ErrorState3& state, const ControllerConfig& config, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("dt must be > 0");
  ErrorState3 out = state;
  const Axes3& clamp = config.integral_clamp;
  out.integral.x = accumulate(state.integral.x, state.ex, config.separation_pos, clamp.x, dt);
  out.integral.y = accumulate(state.integral.y, state.ey, config.separation_pos, clamp.y, dt);
  out.integral.theta = accumulate(state.integral.theta, state.etheta, config.separation_angle, clamp.theta, dt);
  return out;
}

VelocityCmd feedback_linearize(const Axes3& f, const Pose2& target) {
  return {f.x - target.y * f.theta, f.y + target.x * f.theta, -f.theta};
}

Axes3 evaluate_design_functions(const ErrorState3& s, const ControllerConfig& config) {
  return {df_value(config.df_x, {s.ex, s.integral.x, s.e0.x}),
          df_value(config.df_y, {s.ey, s.integral.y, s.e0.y}),
          df_value(config.df_theta, {s.etheta, s.integral.theta, s.e0.theta})};
}

VelocityCmd control_law(ErrorState3& state, const Pose2& target, const ControllerConfig& config, double dt) {
  if (!std::isfinite(state.ex) || !std::isfinite(state.ey) || !std::isfinite(state.etheta)) {
    throw InvalidArgument("error state has non-finite component");
  }
  if (!std::isfinite(target.x) || !std::isfinite(target.y)) {
    throw InvalidArgument("target pose has non-finite component");
  }
  state = update_integrals(state, config, dt);
  return feedback_linearize(evaluate_design_functions(state, config), target);
}

// ---------------------------------------------------------------------------

VelocityCmd CommandSchedule::at(double t) const {
  for (const CommandSegment& s : segments) {
    if (t >= s.start && t < s.end) {
      const double dt = t - s.start;
      return {s.cmd.vx + s.rate.vx * dt, s.cmd.vy + s.rate.vy * dt, s.cmd.omega + s.rate.omega * dt};
    }
  }
  return {};
}

CommandSchedule open_loop_plan(const ErrorState3& initial_error, double cruise_speed, double accel) {
  if (!(cruise_speed > 0.0)) throw InvalidArgument("cruise speed must be > 0");
  if (!(accel >= 0.0)) throw InvalidArgument("ramp acceleration must be >= 0");
  const double dist = std::hypot(initial_error.ex, initial_error.ey);
  CommandSchedule plan;
  if (dist == 0.0) return plan;
  // de/dt = v for a non-rotating chassis, so the error is cancelled by moving
  // against it.
  const double ux = -initial_error.ex / dist;
  const double uy = -initial_error.ey / dist;
  auto along = [&](double v) { return VelocityCmd{v * ux, v * uy, 0.0}; };

  if (accel == 0.0) {
    plan.segments.push_back({0.0, dist / cruise_speed, along(cruise_speed), {}});
    return plan;
  }
  const double peak = std::min(cruise_speed, std::sqrt(dist * accel));
  const double ramp = peak / accel;
  const double cruise = (dist - peak * ramp) / peak;
  plan.segments.push_back({0.0, ramp, {}, along(accel)});
  if (cruise > 0.0) plan.segments.push_back({ramp, ramp + cruise, along(peak), {}});
  plan.segments.push_back({ramp + cruise, 2.0 * ramp + cruise, along(peak), along(-accel)});
  return plan;
}

VelocityCmd decoupled_pid(const ErrorState3& err, PidState& st, const PidGains& g, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("dt must be > 0");
  st.integral.x = std::clamp(st.integral.x + err.ex * dt, -g.integral_clamp, g.integral_clamp);
  st.integral.y = std::clamp(st.integral.y + err.ey * dt, -g.integral_clamp, g.integral_clamp);
  const double dx = st.primed ? (err.ex - st.prev_error.x) / dt : 0.0;
  const double dy = st.primed ? (err.ey - st.prev_error.y) / dt : 0.0;
  st.prev_error = {err.ex, err.ey, err.etheta};
  st.primed = true;
  return {-(g.kp * err.ex + g.ki * st.integral.x + g.kd * dx),
          -(g.kp * err.ey + g.ki * st.integral.y + g.kd * dy), 0.0};
}

// ---------------------------------------------------------------------------

FeedbackLinearizingController::FeedbackLinearizingController(ControllerConfig config, Pose2 desired)
    : config_(config), desired_(desired) {
  validate(config_);
}

void FeedbackLinearizingController::reset(const Pose2& initial) {
  state_ = make_error_state(initial, desired_);
}

VelocityCmd FeedbackLinearizingController::tick(double, const Pose2& target, double dt) {
  refresh_error(state_, target, desired_);
  return control_law(state_, target, config_, dt);
}

std::string FeedbackLinearizingController::name() const {
  return "Ours (" + std::string(to_string(config_.df_x.type)) + ")";
}

OpenLoopController::OpenLoopController(double cruise_speed, Pose2 desired, double accel)
    : cruise_speed_(cruise_speed), accel_(accel), desired_(desired) {
  if (!(cruise_speed_ > 0.0)) throw InvalidArgument("cruise speed must be > 0");
  if (!(accel_ >= 0.0)) throw InvalidArgument("ramp acceleration must be >= 0");
}

void OpenLoopController::reset(const Pose2& initial) {
  plan_ = open_loop_plan(make_error_state(initial, desired_), cruise_speed_, accel_);
}

VelocityCmd OpenLoopController::tick(double t, const Pose2&, double) { return plan_.at(t); }

DecoupledPidController::DecoupledPidController(PidGains gains, Pose2 desired)
    : gains_(gains), desired_(desired) {}

void DecoupledPidController::reset(const Pose2& initial) {
  error_ = make_error_state(initial, desired_);
  pid_ = {};
}

VelocityCmd DecoupledPidController::tick(double, const Pose2& target, double dt) {
  refresh_error(error_, target, desired_);
  return decoupled_pid(error_, pid_, gains_, dt);
}

}  // namespace servobench
