#include <doctest.h>

#include <cmath>

#include "servobench/errors.hpp"
#include "servobench/plant_sim.hpp"

using namespace servobench;

namespace {

NonlinearityConfig fig6_like(double m, double tau) {
  NonlinearityConfig nl;
  nl.dead_zone_linear = m;
  nl.dead_zone_angular = 0.05;
  nl.saturation_linear = 0.3;
  nl.saturation_angular = 1.0;
  nl.delay_tau = tau;
  return nl;
}

ControllerConfig uniform(const DesignFunctionSpec& df) {
  ControllerConfig c;
  c.df_x = c.df_y = c.df_theta = df;
  return c;
}

class ConstantPolicy final : public ServoPolicy {
 public:
  explicit ConstantPolicy(VelocityCmd c) : c_(c) {}
  void reset(const Pose2&) override {}
  VelocityCmd tick(double, const Pose2&, double) override { return c_; }
  const Pose2& desired() const override { return d_; }
  std::string name() const override { return "const"; }

 private:
  VelocityCmd c_;
  Pose2 d_;
};

}  // namespace

TEST_CASE("dead zone") {
  CHECK(apply_dead_zone(0.03, 0.04) == 0.0);
  CHECK(apply_dead_zone(-0.1, 0.04) == -0.1);
  CHECK(apply_dead_zone(0.04, 0.04) == 0.0);
  CHECK(apply_dead_zone(-0.04, 0.04) == 0.0);
  CHECK(apply_dead_zone(0.0400001, 0.04) == 0.0400001);
  CHECK_THROWS_AS(apply_dead_zone(0.1, -0.01), InvalidArgument);
}

TEST_CASE("saturation") {
  CHECK(apply_saturation(0.5, 0.3) == 0.3);
  CHECK(apply_saturation(-0.31, 0.3) == -0.3);
  CHECK(apply_saturation(0.2, 0.3) == 0.2);
  CHECK_THROWS_AS(apply_saturation(0.2, 0.0), InvalidArgument);
}

TEST_CASE("actuate applies per-channel limits") {
  const NonlinearityConfig nl = fig6_like(0.04, 0);
  const VelocityCmd a = actuate({0.5, 0.03, -0.04}, nl);
  CHECK(a.vx == 0.3);
  CHECK(a.vy == 0.0);
  CHECK(a.omega == 0.0);
  const VelocityCmd b = actuate({-0.05, -2.0, 3.0}, nl);
  CHECK(b.vx == -0.05);
  CHECK(b.vy == -0.3);
  CHECK(b.omega == 1.0);
}

TEST_CASE("nonlinearity config validation") {
  NonlinearityConfig nl = fig6_like(0.06, 0.075);
  CHECK_NOTHROW(validate(nl));
  nl.saturation_linear = 0.05;
  CHECK_THROWS_AS(validate(nl), InvalidArgument);
  nl = fig6_like(-0.01, 0);
  CHECK_THROWS_AS(validate(nl), InvalidArgument);
  nl = fig6_like(0.01, -0.1);
  CHECK_THROWS_AS(validate(nl), InvalidArgument);
}

TEST_CASE("transport delay") {
  SUBCASE("zero delay is identity") {
    std::vector<VelocityCmd> in{{1, 2, 3}, {4, 5, 6}};
    const auto out = delayed(in, 0.0, 0.001);
    CHECK(out[0].vx == 1);
    CHECK(out[1].omega == 6);
  }
  SUBCASE("step command appears after tau") {
    std::vector<VelocityCmd> in(200, VelocityCmd{0.2, 0, 0});
    const auto out = delayed(in, 0.05, 0.001);
    for (std::size_t k = 0; k < 50; ++k) CHECK(out[k].vx == 0.0);
    CHECK(out[50].vx == 0.2);  // t = 0.05
  }
  SUBCASE("quantized to the nearest plant step") {
    CHECK(quantize_delay(0.0504, 0.001) == 50);
    CHECK(quantize_delay(0.0506, 0.001) == 51);
    CHECK(quantize_delay(0.075, 0.001) == 75);
    CHECK_THROWS_AS(quantize_delay(-0.1, 0.001), InvalidArgument);
  }
}

TEST_CASE("run_servo: ideal plant TypeI aligns near the closed-form crossing") {
  FeedbackLinearizingController c(uniform(DesignFunctionSpec::type_i(1.0)), {});
  const ServoRunResult r = run_servo({0.5, 0, 0}, c, NonlinearityConfig::none(), {}, 30.0);
  REQUIRE(r.aligned);
  // Oracle: first t with closed_form_error(t) <= 0.015.
  const double t_cross = std::log(0.5 / 0.015);
  CHECK(std::abs(*r.aligning_time - t_cross) < 0.05);
  CHECK(r.end_time == doctest::Approx(*r.aligning_time + 2.0));
  CHECK(std::abs(r.final_error.x) < 0.015 * std::exp(-2.0) * 1.05);
}

TEST_CASE("run_servo: TypeIII under delay and dead zone aligns") {
  ControllerConfig cfg;  // TypeIII kp=4 ki=2, separation 0.1 m
  set_default_integral_clamp(cfg, 0.3, 1.0);
  FeedbackLinearizingController c(cfg, {});
  const ServoRunResult r = run_servo({0.5, 0.3, 0.4}, c, fig6_like(0.06, 0.075), {}, 30.0);
  CHECK(r.aligned);
  CHECK(std::abs(r.final_error.x) < 0.005);
  CHECK(std::abs(r.final_error.y) < 0.005);
}

TEST_CASE("run_servo: TypeI stalls outside tolerance behind a dead zone") {
  FeedbackLinearizingController c(uniform(DesignFunctionSpec::type_i(1.0)), {});
  const ServoRunResult r = run_servo({0.5, 0, 0}, c, fig6_like(0.06, 0.0), {}, 30.0);
  CHECK_FALSE(r.aligned);
  CHECK_FALSE(r.aligning_time.has_value());
  CHECK(r.final_error.x == doctest::Approx(0.06).epsilon(0.05));
  CHECK(r.end_time == doctest::Approx(30.0));
}

TEST_CASE("run_servo preconditions") {
  FeedbackLinearizingController c(uniform(DesignFunctionSpec::type_i(1.0)), {});
  CHECK_THROWS_AS(run_servo({0.5, 0, 0}, c, {}, {}, 2.0), InvalidArgument);
  SimSettings s;
  s.control_period = 0.0105;
  CHECK_THROWS_AS(run_servo({0.5, 0, 0}, c, {}, {}, 10.0, s), InvalidArgument);
}

TEST_CASE("runaway plant raises divergence") {
  ConstantPolicy p({5e5, 0, 0});
  CHECK_THROWS_AS(simulate({0, 0, 0}, p, NonlinearityConfig::none(), std::nullopt, 10.0), SimulationDiverged);
}

TEST_CASE("ideal-plant error curves match the closed forms") {
  SimSettings fine;
  fine.control_period = fine.plant_dt;
  const DesignFunctionSpec dfs[] = {DesignFunctionSpec::type_i(1.0), DesignFunctionSpec::type_ii(1.0, 2.0 / 3.0),
                                    DesignFunctionSpec::type_iii(4.0, 2.0)};
  // Translation and rotation are run separately: a rotating chassis adds a
  // held-step coupling term on top of the per-axis discretization.
  const Pose2 starts[] = {{0.5, 0.3, 0.0}, {0.0, 0.0, 0.4}};
  for (const auto& df : dfs) {
    for (const Pose2& start : starts) {
      ControllerConfig cfg = uniform(df);
      cfg.separation_pos = 1e9;
      cfg.separation_angle = 1e9;
      cfg.integral_clamp = {1e9, 1e9, 1e9};
      FeedbackLinearizingController c(cfg, {});
      const ServoRunResult r = simulate(start, c, NonlinearityConfig::none(), std::nullopt, 5.0, fine);
      for (const auto& s : r.trajectory) {
        CHECK(std::abs(s.ex - closed_form_error(df, start.x, s.t)) <= 1e-3 * std::abs(start.x));
        CHECK(std::abs(s.ey - closed_form_error(df, start.y, s.t)) <= 1e-3 * std::abs(start.y));
        CHECK(std::abs(s.etheta - closed_form_error(df, start.theta, s.t)) <= 1e-3 * std::abs(start.theta));
      }
    }
  }
}

TEST_CASE("dead zone and saturation never amplify a command") {
  ControllerConfig cfg;
  set_default_integral_clamp(cfg, 0.3, 1.0);
  FeedbackLinearizingController c(cfg, {0.35, 0, 0});
  const ServoRunResult r = simulate({1.0, 0.5, 0.8}, c, fig6_like(0.06, 0.0), std::nullopt, 10.0);
  for (const auto& s : r.trajectory) {
    CHECK(std::abs(s.actuated.vx) <= std::abs(s.raw.vx));
    CHECK(std::abs(s.actuated.vy) <= std::abs(s.raw.vy));
    CHECK(std::abs(s.actuated.omega) <= std::abs(s.raw.omega));
  }
}

TEST_CASE("delay shifts an open-loop command sequence") {
  const NonlinearityConfig base = fig6_like(0.0, 0.0);
  NonlinearityConfig late = base;
  late.delay_tau = 0.08;
  OpenLoopController a(0.15, {}, 0.1), b(0.15, {}, 0.1);
  const ServoRunResult ra = simulate({0.6, 0.2, 0}, a, base, std::nullopt, 8.0);
  const ServoRunResult rb = simulate({0.6, 0.2, 0}, b, late, std::nullopt, 8.0);
  REQUIRE(ra.trajectory.size() == rb.trajectory.size());
  const std::size_t shift = 8;  // 0.08 s in 0.01 s ticks
  for (std::size_t i = 0; i + shift < ra.trajectory.size(); ++i) {
    CHECK(rb.trajectory[i + shift].actuated.vx == ra.trajectory[i].actuated.vx);
    CHECK(rb.trajectory[i + shift].actuated.vy == ra.trajectory[i].actuated.vy);
    CHECK(rb.trajectory[i].raw.vx == ra.trajectory[i].raw.vx);
  }
  for (std::size_t i = 0; i < shift; ++i) CHECK(rb.trajectory[i].actuated.vx == 0.0);
  // Same displacement, just later.
  CHECK(rb.final_error.x == doctest::Approx(ra.final_error.x).epsilon(1e-9));
}

TEST_CASE("aligned is monotone in tolerance") {
  ControllerConfig cfg;
  set_default_integral_clamp(cfg, 0.3, 1.0);
  const double tols[] = {0.002, 0.005, 0.01, 0.015, 0.03, 0.1};
  for (double m : {0.04, 0.08}) {
    bool prev = false;
    for (double tol : tols) {
      FeedbackLinearizingController c(cfg, {});
      TerminationSpec term;
      term.pos_tolerance = tol;
      term.angle_tolerance = 0.05;
      const bool aligned = run_servo({0.5, 0.3, 0.4}, c, fig6_like(m, 0.1), term, 20.0).aligned;
      if (prev) CHECK(aligned);
      prev = aligned;
    }
    CHECK(prev);
  }
}

TEST_CASE("measured steady state averages the final window") {
  std::vector<TrajectorySample> t;
  for (int i = 0; i <= 10; ++i) t.push_back({double(i), i >= 8 ? -0.5 : 1.0, 0, 0, {}, {}});
  CHECK(measured_steady_state(t, 0.2) == doctest::Approx(0.5));
  CHECK_THROWS_AS(measured_steady_state({}, 0.2), InsufficientData);
}

TEST_CASE("sweep examples") {
  SweepGrid g;
  g.taus = {0.05};
  g.dead_zones = {0.04};
  g.dfs = {DesignFunctionSpec::type_i(1)};
  auto cells = sweep_fig6(g);
  REQUIRE(cells.size() == 1);
  CHECK(cells[0].analytic_ess == doctest::Approx(0.04));
  CHECK(std::abs(cells[0].measured_ess - 0.04) <= 0.1 * 0.04);

  g.taus = {0.0};
  g.dead_zones = {0.05};
  g.dfs = {DesignFunctionSpec::type_ii(1, 2.0 / 3.0)};
  cells = sweep_fig6(g);
  CHECK(std::abs(cells[0].measured_ess - 0.0112) <= 0.15 * 0.0112);

  g.taus = {0.05, 0.1};
  g.dead_zones = {0.04, 0.08};
  g.dfs = {DesignFunctionSpec::type_iii(4, 2)};
  for (const auto& c : sweep_fig6(g)) CHECK(c.measured_ess < 0.005);

  g.dfs.clear();
  CHECK_THROWS_AS(sweep_fig6(g), InvalidArgument);
}

TEST_CASE("sweep ordering: TypeI > TypeII > TypeIII on the grid") {
  // Common kp = 1; TypeIII critically damped (ki = kp^2 / 4).
  SweepGrid g;
  g.taus = {0.05, 0.075, 0.1};
  g.dead_zones = {0.04, 0.06, 0.08};
  g.dfs = {DesignFunctionSpec::type_i(1), DesignFunctionSpec::type_ii(1, 2.0 / 3.0),
           DesignFunctionSpec::type_iii(1, 0.25)};
  const auto cells = sweep_fig6(g, 4);
  REQUIRE(cells.size() == 27);
  for (std::size_t i = 0; i < 9; ++i) {
    CHECK(cells[i].measured_ess > cells[i + 9].measured_ess);
    CHECK(cells[i + 9].measured_ess > cells[i + 18].measured_ess);
    CHECK(cells[i].tau == cells[i + 18].tau);
    CHECK(cells[i].dead_zone == cells[i + 18].dead_zone);
  }
  // Parallel dispatch gives the same numbers as a serial run.
  const auto serial = sweep_fig6(g, 1);
  for (std::size_t i = 0; i < cells.size(); ++i) {
    CHECK(cells[i].run_id == i);
    CHECK(cells[i].measured_ess == serial[i].measured_ess);
  }
}
