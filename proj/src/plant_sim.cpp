#include "servobench/plant_sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>

#include "servobench/errors.hpp"

namespace servobench {

namespace {

// Tolerance used when comparing accumulated simulation time against
// configured instants.
constexpr double kTimeEps = 1e-9;

std::size_t steps_for(double duration, double dt) {
  return static_cast<std::size_t>(std::llround(duration / dt));
}

}  // namespace

void validate(const NonlinearityConfig& c) {
  if (!(c.dead_zone_linear >= 0.0) || !(c.dead_zone_angular >= 0.0)) {
    throw InvalidArgument("dead zone must be >= 0");
  }
  if (!(c.saturation_linear > c.dead_zone_linear) || !(c.saturation_angular > c.dead_zone_angular)) {
    throw InvalidArgument("saturation must exceed the dead zone");
  }
  if (!(c.delay_tau >= 0.0) || !std::isfinite(c.delay_tau)) throw InvalidArgument("delay tau must be >= 0");
}

void validate(const TerminationSpec& s) {
  if (!(s.pos_tolerance > 0.0) || !(s.angle_tolerance > 0.0) || !(s.dwell > 0.0)) {
    throw InvalidArgument("termination tolerances and dwell must be > 0");
  }
}

void validate(const SimSettings& s) {
  if (!(s.plant_dt > 0.0)) throw InvalidArgument("plant dt must be > 0");
  if (!(s.control_period >= s.plant_dt)) throw InvalidArgument("control period must be >= plant dt");
  const double ratio = s.control_period / s.plant_dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-6) {
    throw InvalidArgument("control period must be an integer multiple of plant dt");
  }
}

double ServoRunResult::final_theta_deg() const { return final_error.theta * 180.0 / std::numbers::pi; }

double apply_dead_zone(double v, double m) {
  if (!(m >= 0.0)) throw InvalidArgument("dead zone must be >= 0");
  return std::abs(v) <= m ? 0.0 : v;
}

VelocityCmd apply_dead_zone(const VelocityCmd& v, const NonlinearityConfig& nl) {
  return {apply_dead_zone(v.vx, nl.dead_zone_linear), apply_dead_zone(v.vy, nl.dead_zone_linear),
          apply_dead_zone(v.omega, nl.dead_zone_angular)};
}

double apply_saturation(double v, double limit) {
  if (!(limit > 0.0)) throw InvalidArgument("saturation limit must be > 0");
  return std::clamp(v, -limit, limit);
}

VelocityCmd apply_saturation(const VelocityCmd& v, const NonlinearityConfig& nl) {
  return {apply_saturation(v.vx, nl.saturation_linear), apply_saturation(v.vy, nl.saturation_linear),
          apply_saturation(v.omega, nl.saturation_angular)};
}

VelocityCmd actuate(const VelocityCmd& raw, const NonlinearityConfig& nl) {
  return apply_dead_zone(apply_saturation(raw, nl), nl);
}

std::size_t quantize_delay(double tau, double plant_dt) {
  if (!(tau >= 0.0)) throw InvalidArgument("delay tau must be >= 0");
  if (!(plant_dt > 0.0)) throw InvalidArgument("plant dt must be > 0");
  return steps_for(tau, plant_dt);
}

VelocityCmd DelayLine::push(const VelocityCmd& cmd) {
  if (steps_ == 0) return cmd;
  buffer_.push_back(cmd);
  if (buffer_.size() <= steps_) return {};
  VelocityCmd out = buffer_.front();
  buffer_.pop_front();
  return out;
}

std::vector<VelocityCmd> delayed(const std::vector<VelocityCmd>& stream, double tau, double plant_dt) {
  DelayLine line(tau, plant_dt);
  std::vector<VelocityCmd> out;
  out.reserve(stream.size());
  for (const VelocityCmd& c : stream) out.push_back(line.push(c));
  return out;
}

bool within_tolerance(double ex, double ey, double etheta, const TerminationSpec& term) {
  return std::abs(ex) <= term.pos_tolerance && std::abs(ey) <= term.pos_tolerance &&
         std::abs(etheta) <= term.angle_tolerance;
}

ServoRunResult simulate(const Pose2& initial, ServoPolicy& policy, const NonlinearityConfig& nl,
                        const std::optional<TerminationSpec>& term, double horizon,
                        const SimSettings& settings) {
  validate(nl);
  validate(settings);
  if (term) validate(*term);
  if (!(horizon > 0.0)) throw InvalidArgument("horizon must be > 0");

  const double dt = settings.plant_dt;
  const std::size_t ticks_per_ctrl = steps_for(settings.control_period, dt);
  const std::size_t n_steps = steps_for(horizon, dt);

  Pose2 pose = initial;
  pose.theta = normalize_angle(pose.theta);
  policy.reset(pose);
  DelayLine delay(nl.delay_tau, dt);

  ServoRunResult result;
  result.trajectory.reserve(n_steps / ticks_per_ctrl + 2);
  bool inside = false;
  double entered = 0.0;
  VelocityCmd raw;
  VelocityCmd held;

  for (std::size_t k = 0;; ++k) {
    const double t = static_cast<double>(k) * dt;
    const bool tick = k % ticks_per_ctrl == 0;
    const bool last = k >= n_steps;

    ErrorState3 err = make_error_state(pose, policy.desired());
    bool done = last;
    if (tick || last) {
      if (term) {
        if (within_tolerance(err.ex, err.ey, err.etheta, *term)) {
          if (!inside) entered = t;
          inside = true;
          if (t - entered >= term->dwell - kTimeEps) {
            result.aligned = true;
            result.aligning_time = entered;
            done = true;
          }
        } else {
          inside = false;
        }
      }
      if (tick && !done) {
        raw = policy.tick(t, pose, settings.control_period);
        held = actuate(raw, nl);
      }
    }

    const VelocityCmd applied = delay.push(held);
    if (tick || done) {
      result.trajectory.push_back({t, err.ex, err.ey, err.etheta, raw, applied});
    }
    if (done) {
      result.final_error = {err.ex, err.ey, err.etheta};
      result.end_time = t;
      break;
    }

    pose = exact_step(pose, applied, {dt});
    if (!std::isfinite(pose.x) || !std::isfinite(pose.y) || std::abs(pose.x) > kDivergenceBound ||
        std::abs(pose.y) > kDivergenceBound) {
      throw SimulationDiverged("closed loop diverged at t=" + std::to_string(t + dt));
    }
  }
  return result;
}

ServoRunResult run_servo(const Pose2& initial, ServoPolicy& policy, const NonlinearityConfig& nl,
                         const TerminationSpec& term, double timeout, const SimSettings& settings) {
  if (!(timeout > term.dwell)) throw InvalidArgument("timeout must exceed the dwell window");
  return simulate(initial, policy, nl, term, timeout, settings);
}

double measured_steady_state(const std::vector<TrajectorySample>& traj, double window_fraction) {
  if (traj.empty()) throw InsufficientData("empty trajectory");
  if (!(window_fraction > 0.0 && window_fraction <= 1.0)) throw InvalidArgument("window fraction must be in (0, 1]");
  const double t_end = traj.back().t;
  const double t_start = t_end * (1.0 - window_fraction);
  double sum = 0.0;
  std::size_t n = 0;
  for (const TrajectorySample& s : traj) {
    if (s.t + kTimeEps >= t_start) {
      sum += std::abs(s.ex);
      ++n;
    }
  }
  return sum / static_cast<double>(n);
}

std::vector<SweepCell> sweep_fig6(const SweepGrid& grid, unsigned threads) {
  if (grid.taus.empty() || grid.dead_zones.empty() || grid.dfs.empty()) {
    throw InvalidArgument("sweep grid must be non-empty");
  }
  std::vector<SweepCell> cells;
  for (const DesignFunctionSpec& df : grid.dfs) {
    validate(df);
    for (double tau : grid.taus) {
      for (double m : grid.dead_zones) {
        SweepCell c;
        c.run_id = cells.size();
        c.df = df;
        c.tau = tau;
        c.dead_zone = m;
        cells.push_back(std::move(c));
      }
    }
  }

  auto run_cell = [&grid](SweepCell& c) {
    ControllerConfig cc;
    cc.df_x = cc.df_y = cc.df_theta = c.df;
    cc.separation_pos = grid.separation_pos;
    set_default_integral_clamp(cc, grid.saturation, grid.saturation);
    NonlinearityConfig nl;
    nl.dead_zone_linear = c.dead_zone;
    nl.dead_zone_angular = grid.dead_zone_angular;
    nl.saturation_linear = grid.saturation;
    nl.saturation_angular = grid.saturation;
    nl.delay_tau = c.tau;
    FeedbackLinearizingController ctrl(cc, {});
    ServoRunResult r = simulate({grid.e0, 0.0, 0.0}, ctrl, nl, std::nullopt, grid.horizon, grid.settings);
    c.measured_ess = measured_steady_state(r.trajectory, grid.window_fraction);
    c.analytic_ess = steady_state_error(c.df, c.dead_zone);
    c.trajectory = std::move(r.trajectory);
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(cells.size()));
  if (threads <= 1) {
    for (SweepCell& c : cells) run_cell(c);
    return cells;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  std::vector<std::jthread> workers;
  for (unsigned w = 0; w < threads; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < cells.size(); i = next++) {
        try {
          run_cell(cells[i]);
        } catch (...) {
          std::lock_guard lock(failure_mu);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  workers.clear();
  if (failure) std::rethrow_exception(failure);
  return cells;
}

}  // namespace servobench
