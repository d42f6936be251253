#include "servobench/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "servobench/config.hpp"
#include "servobench/csv_io.hpp"
#include "servobench/design_function.hpp"
#include "servobench/errors.hpp"
#include "servobench/perception.hpp"

namespace servobench {

namespace fs = std::filesystem;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fixed(double v, int prec) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(prec) << (v == 0.0 ? 0.0 : v);
  return ss.str();
}

unsigned sweep_threads() {
  if (const char* env = std::getenv("SERVOBENCH_THREADS")) {
    try {
      const long n = std::stol(env);
      if (n > 0) return static_cast<unsigned>(n);
    } catch (const std::exception&) {
    }
  }
  return 0;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot write " + path.string());
  return f;
}

void make_out_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create output directory " + dir.string() + ": " + ec.message());
}

// --- analytic ----------------------------------------------------------------

struct AnalyticArgs {
  std::string type = "TypeI";
  double kp = 1.0;
  double ki = 0.0;
  double alpha = 2.0 / 3.0;
  double e0 = 1.0;
  double m = 0.05;
  double horizon = 10.0;
  double sample = 0.1;
  std::string out;
};

int cmd_analytic(const AnalyticArgs& a, std::ostream& out) {
  const auto type = parse_df_type(a.type);
  if (!type) throw UsageError("unknown design function type '" + a.type + "'");
  const DesignFunctionSpec spec{*type, a.kp, a.ki, a.alpha};
  try {
    validate(spec);
    if (*type == DfType::TypeIII) type3_modes(a.kp, a.ki);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (!(a.horizon > 0.0) || !(a.sample > 0.0)) throw UsageError("horizon and sample step must be > 0");
  if (!(a.m >= 0.0)) throw UsageError("dead zone must be >= 0");

  std::ostringstream body;
  body << "t,e\n";
  const auto n = static_cast<long>(std::floor(a.horizon / a.sample + 1e-9));
  for (long i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) * a.sample;
    body << fmt9(t) << ',' << fmt9(closed_form_error(spec, a.e0, t)) << '\n';
  }
  body << "e_ss=" << fmt9(steady_state_error(spec, a.m)) << '\n';

  if (a.out.empty()) {
    out << body.str();
  } else {
    open_out(a.out) << body.str();
    out << "e_ss=" << fmt9(steady_state_error(spec, a.m)) << '\n';
  }
  return kExitOk;
}

// --- run -------------------------------------------------------------------

int cmd_run(const ScenarioConfig& cfg, const std::string& out_dir, std::ostream& out) {
  auto policy = make_policy(cfg);
  const ServoRunResult r = run_servo(cfg.initial, *policy, cfg.nonlinearity, cfg.termination, cfg.timeout, cfg.sim);
  const std::string report = format_run_report({{policy->name(), cfg.env, r}});
  out << report;
  if (!out_dir.empty()) {
    make_out_dir(out_dir);
    auto traj = open_out(fs::path(out_dir) / (cfg.name + "_trajectory.csv"));
    write_trajectory_csv(traj, r.trajectory);
    open_out(fs::path(out_dir) / (cfg.name + "_report.txt")) << report;
  }
  return r.aligned ? kExitOk : kExitNotAligned;
}

// --- fig6 ------------------------------------------------------------------

std::string cell_file_name(const SweepCell& c) {
  return std::string(to_string(c.df.type)) + "_tau" + fmt9(c.tau) + "_m" + fmt9(c.dead_zone) + ".csv";
}

int cmd_fig6(const ScenarioConfig& cfg, const std::string& out_dir, std::ostream& out) {
  if (!cfg.sweep) throw UsageError("config has no [sweep] section");
  const std::vector<SweepCell> cells = sweep_fig6(*cfg.sweep, sweep_threads());

  std::ostringstream summary;
  summary << "df_type,kp,ki,alpha,tau,m,measured_ess,analytic_ess,sub_cm,margin\n";
  for (const SweepCell& c : cells) {
    summary << to_string(c.df.type) << ',' << fmt9(c.df.kp) << ','
            << (c.df.type == DfType::TypeIII ? fmt9(c.df.ki) : "-") << ','
            << (c.df.type == DfType::TypeII ? fmt9(c.df.alpha) : "-") << ',' << fmt9(c.tau) << ','
            << fmt9(c.dead_zone) << ',' << fmt9(c.measured_ess) << ',' << fmt9(c.analytic_ess) << ','
            << (c.measured_ess < cfg.requirement ? "PASS" : "FAIL") << ','
            << (c.measured_ess < cfg.margin ? "PASS" : "FAIL") << '\n';
  }

  if (!out_dir.empty()) {
    make_out_dir(out_dir);
    for (const SweepCell& c : cells) {
      auto f = open_out(fs::path(out_dir) / cell_file_name(c));
      write_trajectory_csv(f, c.trajectory);
    }
    open_out(fs::path(out_dir) / "summary.csv") << summary.str();
  }
  out << summary.str();
  return kExitOk;
}

// --- filter ----------------------------------------------------------------

void print_metrics(std::ostream& out, const char* label, const EstimateSequence& seq) {
  const PrecisionMetrics m = precision_metrics(seq);
  out << label << " S_pos=" << fmt9(m.s_pos) << " S_att=" << fmt9(m.s_att) << '\n';
}

int cmd_filter(const ScenarioConfig& cfg, const std::string& input, const std::string& out_dir, std::ostream& out) {
  if (!(cfg.filter_a >= 0.0 && cfg.filter_a <= 1.0)) throw UsageError("filter coefficient a must lie in [0, 1]");
  EstimateSequence raw;
  if (!input.empty()) {
    std::ifstream in(input);
    if (!in) throw UsageError("cannot open " + input);
    try {
      raw = read_estimates_csv(in);
    } catch (const InvalidArgument& e) {
      throw UsageError(input + ": " + e.what());
    }
  } else {
    raw = synth_stream(cfg.synth);
  }
  if (raw.size() < 2) throw UsageError("stream needs at least two rows");
  const EstimateSequence filtered = filter_stream(raw, cfg.filter_a, cfg.max_hold);

  std::ostringstream metrics;
  print_metrics(metrics, "raw", raw);
  print_metrics(metrics, "filtered", filtered);

  if (!out_dir.empty()) {
    make_out_dir(out_dir);
    auto r = open_out(fs::path(out_dir) / "raw.csv");
    write_estimates_csv(r, raw);
    auto f = open_out(fs::path(out_dir) / "filtered.csv");
    write_estimates_csv(f, filtered);
    out << metrics.str();
  } else {
    write_estimates_csv(out, filtered);
    std::istringstream lines(metrics.str());
    for (std::string l; std::getline(lines, l);) out << "# " << l << '\n';
  }
  return kExitOk;
}

// --- enhance ---------------------------------------------------------------

int cmd_enhance(const std::string& input, const std::string& output, double k) {
  if (!(k > 0.0)) throw UsageError("enhancement factor k must be > 0");
  RgbImage img;
  try {
    img = read_ppm(input);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  write_pgm(output, enhance(img, {k}));
  return kExitOk;
}

}  // namespace

std::string format_run_report(const std::vector<RunReportRow>& rows) {
  std::ostringstream ss;
  ss << std::left << std::setw(18) << "Method" << std::setw(12) << "Env" << std::right << std::setw(9) << "x (cm)"
     << std::setw(9) << "y (cm)" << std::setw(12) << "theta (deg)" << std::setw(20) << "Aligning Time (s)"
     << std::setw(9) << "Result" << '\n';
  for (const RunReportRow& r : rows) {
    const ServoRunResult& res = r.result;
    ss << std::left << std::setw(18) << r.method << std::setw(12) << r.env << std::right << std::setw(9)
       << fixed(res.final_x_cm(), 2) << std::setw(9) << fixed(res.final_y_cm(), 2) << std::setw(12)
       << fixed(res.final_theta_deg(), 2) << std::setw(20)
       << (res.aligning_time ? fixed(*res.aligning_time, 2) : std::string("Timeout")) << std::setw(9)
       << (res.aligned ? "aligned" : "failed") << '\n';
  }
  return ss.str();
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Feedback-linearized chassis servo and pose-filter simulation toolkit", "servobench"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::string format = "csv";

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", config_path, "Scenario config file");
    if (config_required) opt->required();
    sub->add_option("--out", out_dir, "Output directory");
    sub->add_option("--seed", seed, "Override the config RNG seed");
    sub->add_option("--format", format, "Output format")->check(CLI::IsMember({"csv"}));
  };

  AnalyticArgs an;
  auto* analytic = app.add_subcommand("analytic", "Closed-form error curve and steady-state prediction");
  analytic->add_option("--type", an.type, "TypeI | TypeII | TypeIII");
  analytic->add_option("--kp", an.kp, "Proportional gain");
  analytic->add_option("--ki", an.ki, "Integral gain (TypeIII)");
  analytic->add_option("--alpha", an.alpha, "Exponent (TypeII)");
  analytic->add_option("--e0", an.e0, "Initial error");
  analytic->add_option("--m", an.m, "Velocity dead zone size");
  analytic->add_option("--horizon", an.horizon, "Curve horizon (s)");
  analytic->add_option("--sample", an.sample, "Sample spacing (s)");
  analytic->add_option("--output", an.out, "Write the curve to this file instead of stdout");
  analytic->add_option("--format", format, "Output format")->check(CLI::IsMember({"csv"}));

  auto* run = app.add_subcommand("run", "Single servo run under the evaluation protocol");
  add_common(run, true);

  auto* fig6 = app.add_subcommand("fig6", "Dead-zone / delay sweep over the design functions");
  add_common(fig6, true);

  std::string input;
  std::optional<double> a_override;
  std::optional<double> sigma_override;
  std::optional<double> dropout_override;
  std::optional<std::size_t> length_override;
  auto* filter = app.add_subcommand("filter", "Pose smoothing on a recorded or synthetic stream");
  add_common(filter, false);
  filter->add_option("--input", input, "Estimate CSV (t,x,y,theta,detected)");
  filter->add_option("--a", a_override, "Filter coefficient in [0, 1]");
  filter->add_option("--sigma-pos", sigma_override, "Synthetic position noise (m)");
  filter->add_option("--dropout", dropout_override, "Synthetic dropout probability");
  filter->add_option("--length", length_override, "Synthetic stream length");

  std::string image_in;
  std::string image_out;
  double k = 1.0;
  auto* enh = app.add_subcommand("enhance", "Apply the red-marker feature map to a P6 image");
  enh->add_option("--input", image_in, "Input P6 pixmap")->required();
  enh->add_option("--output", image_out, "Output P5 graymap")->required();
  enh->add_option("--k", k, "Enhancement factor (> 0)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n' << app.help();
    return kExitUsage;
  }

  try {
    if (*analytic) return cmd_analytic(an, out);
    if (*enh) return cmd_enhance(image_in, image_out, k);

    ScenarioConfig cfg = config_path.empty() ? load_scenario(ConfigFile::parse("")) : load_scenario(config_path);
    if (seed) {
      cfg.seed = *seed;
      cfg.synth.seed = *seed;
    }
    if (*run) return cmd_run(cfg, out_dir, out);
    if (*fig6) return cmd_fig6(cfg, out_dir, out);
    if (*filter) {
      if (a_override) cfg.filter_a = *a_override;
      if (sigma_override) cfg.synth.sigma_pos = *sigma_override;
      if (dropout_override) {
        if (!(*dropout_override >= 0.0 && *dropout_override <= 1.0)) throw UsageError("dropout must lie in [0, 1]");
        cfg.synth.dropout = *dropout_override;
      }
      if (length_override) cfg.synth.length = *length_override;
      return cmd_filter(cfg, input, out_dir, out);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const SimulationDiverged& e) {
    err << "simulation diverged: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace servobench
