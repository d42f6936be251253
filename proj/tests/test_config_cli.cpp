#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "servobench/cli.hpp"
#include "servobench/config.hpp"
#include "servobench/errors.hpp"

using namespace servobench;
namespace fs = std::filesystem;

namespace {

const fs::path kRoot = SERVOBENCH_SOURCE_DIR;

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "servobench_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_text(const fs::path& path, const std::string& text) {
  std::ofstream(path) << text;
  return path;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::string cfg(const std::string& name) { return (kRoot / "configs" / name).string(); }

}  // namespace

TEST_CASE("config parser basics") {
  const ConfigFile f = ConfigFile::parse(
      "# top comment\n"
      "[controller]\n"
      "type = TypeII   # trailing\n"
      "kp = 2\n"
      "\n"
      "[sweep]\n"
      "taus = 0.05, 0.1\n"
      "types = I III\n");
  CHECK(f.get_string("controller.type", "") == "TypeII");
  CHECK(f.get_double("controller.kp", 0) == 2.0);
  CHECK(f.get_double("controller.ki", 7.0) == 7.0);
  CHECK(f.get_list("sweep.taus", {}) == std::vector<double>{0.05, 0.1});
  CHECK(f.get_words("sweep.types", {}) == std::vector<std::string>{"I", "III"});
  CHECK(f.line_of("controller.kp") == 4);
  CHECK(f.line_of("controller.nothing") == 0);
  CHECK_NOTHROW(f.reject_unused());
}

TEST_CASE("config parser diagnostics carry field and line") {
  try {
    ConfigFile::parse("[controller]\nkp = 1\nkp = 2\n");
    FAIL("duplicate key accepted");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "controller.kp");
    CHECK(e.line() == 3);
  }
  // Keys outside any section parse, but no scenario field claims them.
  CHECK_THROWS_AS(load_scenario(ConfigFile::parse("kp = 1\n")), ConfigError);
  CHECK_THROWS_AS(ConfigFile::parse("[controller]\njust words\n"), ConfigError);
  CHECK_THROWS_AS(ConfigFile::parse("[controller\nkp = 1\n"), ConfigError);

  const ConfigFile f = ConfigFile::parse("[controller]\nkp = fast\n");
  try {
    f.get_double("controller.kp", 1);
    FAIL("non-numeric value accepted");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "controller.kp");
    CHECK(e.line() == 2);
  }
}

TEST_CASE("scenario validation names the offending field") {
  auto field_of = [](const std::string& text) {
    try {
      load_scenario(ConfigFile::parse(text));
    } catch (const ConfigError& e) {
      return e.field();
    }
    return std::string("<accepted>");
  };
  CHECK(field_of("[controller]\ntype = TypeII\nkp = 1\nalpha = 1\n") == "controller.alpha");
  CHECK(field_of("[controller]\nkp = -1\n") == "controller.kp");
  CHECK(field_of("[controller]\nki = 0\n") == "controller.ki");
  CHECK(field_of("[controller]\ntheta.ki = -2\n") == "controller.theta.ki");
  CHECK(field_of("[sweep]\ntypes = II\ntaus = 0\ndead_zones = 0.04\nTypeII.alpha = 2\n") == "sweep.TypeII.alpha");
  CHECK(field_of("[nonlinearity]\ndead_zone = 0.5\nsaturation = 0.3\n").rfind("nonlinearity.", 0) == 0);
  CHECK(field_of("[controller]\nkpp = 1\n") == "controller.kpp");
  CHECK(field_of("[scenario]\nmethod = teleport\n") == "scenario.method");
  CHECK(field_of("[sim]\ncontrol_period = 0.0105\n").rfind("sim.", 0) == 0);
  CHECK(field_of("[filter]\na = 0.8\n") == "<accepted>");
}

TEST_CASE("shipped configs load") {
  for (const char* name : {"type3_default.cfg", "openloop_realproxy.cfg", "pid_realproxy.cfg", "fig6_sweep.cfg",
                           "filter_synth.cfg"}) {
    CAPTURE(name);
    CHECK_NOTHROW(load_scenario(fs::path(cfg(name))));
  }
  const ScenarioConfig s = load_scenario(fs::path(cfg("type3_default.cfg")));
  CHECK(s.controller.df_x.type == DfType::TypeIII);
  CHECK(s.controller.df_x.kp == 4.0);
  CHECK(s.controller.integral_clamp.x == doctest::Approx(0.15));
  CHECK(s.nonlinearity.delay_tau == 0.075);
}

TEST_CASE("analytic subcommand") {
  CliResult r = cli({"analytic", "--type", "TypeI", "--kp", "1", "--e0", "1", "--m", "0.05"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.rfind("t,e\n0,1\n", 0) == 0);
  CHECK(r.out.find("\ne_ss=0.05\n") != std::string::npos);

  r = cli({"analytic", "--type", "TypeIII", "--kp", "4", "--ki", "2", "--m", "0.06"});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("\ne_ss=0\n") != std::string::npos);

  r = cli({"analytic", "--type", "TypeII", "--kp", "1", "--alpha", "1"});
  CHECK(r.code == kExitUsage);
  CHECK_FALSE(r.err.empty());

  CHECK(cli({"analytic", "--type", "TypeIV"}).code == kExitUsage);
  CHECK(cli({"analytic", "--format", "json"}).code == kExitUsage);
  CHECK(cli({"bogus"}).code == kExitUsage);
  CHECK(cli({}).code == kExitUsage);
}

TEST_CASE("run subcommand on the shipped configs") {
  const fs::path dir = scratch_dir("run");
  CliResult r = cli({"run", "--config", cfg("type3_default.cfg"), "--out", dir.string()});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("aligned") != std::string::npos);
  CHECK(fs::exists(dir / "type3_default_trajectory.csv"));
  CHECK(fs::exists(dir / "type3_default_report.txt"));
  const std::string csv = slurp(dir / "type3_default_trajectory.csv");
  CHECK(csv.rfind("t,ex,ey,etheta,vx_raw,vy_raw,omega_raw,vx_act,vy_act,omega_act\n", 0) == 0);

  r = cli({"run", "--config", cfg("openloop_realproxy.cfg"), "--out", dir.string()});
  CHECK(r.code == kExitNotAligned);
  CHECK(r.out.find("Timeout") != std::string::npos);

  r = cli({"run", "--config", cfg("pid_realproxy.cfg"), "--out", dir.string()});
  CHECK(r.code == kExitNotAligned);

  CHECK(cli({"run"}).code == kExitUsage);
  CHECK(cli({"run", "--config", (dir / "missing.cfg").string()}).code == kExitUsage);
  const fs::path bad = write_text(dir / "bad.cfg", "[controller]\nkp = 1\nkq = 2\n");
  r = cli({"run", "--config", bad.string()});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("controller.kq") != std::string::npos);
}

TEST_CASE("run reports divergence with its own exit code") {
  const fs::path dir = scratch_dir("diverge");
  // Velocity far beyond anything the divergence bound tolerates.
  const fs::path c = write_text(dir / "runaway.cfg",
                                "[scenario]\nname = runaway\nmethod = openloop\ntimeout = 30\n"
                                "[baseline]\ncruise_speed = 1e9\n"
                                "[initial]\nx = 5e8\ny = 0\ntheta = 0\n");
  CHECK(cli({"run", "--config", c.string(), "--out", dir.string()}).code == kExitDiverged);
}

TEST_CASE("report table never shows a time for a Timeout row") {
  ServoRunResult timed_out;
  timed_out.final_error = {0.07, 0.05, 0.8};
  ServoRunResult ok;
  ok.aligned = true;
  ok.aligning_time = 4.06;
  ok.final_error = {0.0048, -0.004, 0.001};
  const std::string table = format_run_report({{"Open-loop", "real-proxy", timed_out}, {"Ours", "sim", ok}});
  CHECK(table.find("Timeout") != std::string::npos);
  CHECK(table.find("4.06") != std::string::npos);
  CHECK(table.find("0.48") != std::string::npos);
  std::istringstream lines(table);
  for (std::string l; std::getline(lines, l);) {
    if (l.find("Open-loop") != std::string::npos) CHECK(l.find("failed") != std::string::npos);
  }
}

TEST_CASE("fig6 subcommand") {
  const fs::path a = scratch_dir("fig6_a");
  const fs::path b = scratch_dir("fig6_b");
  CliResult r = cli({"fig6", "--config", cfg("fig6_sweep.cfg"), "--out", a.string()});
  REQUIRE(r.code == kExitOk);
  REQUIRE(cli({"fig6", "--config", cfg("fig6_sweep.cfg"), "--out", b.string()}).code == kExitOk);

  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    ++files;
    CHECK(slurp(entry.path()) == slurp(b / entry.path().filename()));
  }
  CHECK(files == 28);
  CHECK(fs::exists(a / "TypeIII_tau0.075_m0.06.csv"));

  std::istringstream summary(slurp(a / "summary.csv"));
  std::string line;
  std::getline(summary, line);
  CHECK(line == "df_type,kp,ki,alpha,tau,m,measured_ess,analytic_ess,sub_cm,margin");
  int rows = 0;
  while (std::getline(summary, line)) {
    ++rows;
    if (line.rfind("TypeIII,", 0) == 0) CHECK(line.substr(line.size() - 10) == ",PASS,PASS");
    if (line.rfind("TypeI,", 0) == 0) CHECK(line.find(",FAIL,") != std::string::npos);
  }
  CHECK(rows == 27);

  const fs::path dir = scratch_dir("fig6_empty");
  const fs::path empty = write_text(dir / "empty.cfg", "[sweep]\ntypes = III\ntaus =\ndead_zones = 0.04\n");
  CHECK(cli({"fig6", "--config", empty.string(), "--out", dir.string()}).code == kExitUsage);
  const fs::path nosweep = write_text(dir / "nosweep.cfg", "[scenario]\nname = x\n");
  CHECK(cli({"fig6", "--config", nosweep.string()}).code == kExitUsage);
}

TEST_CASE("filter subcommand") {
  const fs::path dir = scratch_dir("filter");
  CliResult r = cli({"filter", "--config", cfg("filter_synth.cfg"), "--out", dir.string()});
  REQUIRE(r.code == kExitOk);
  CHECK(fs::exists(dir / "raw.csv"));
  CHECK(fs::exists(dir / "filtered.csv"));
  CHECK(r.out.find("raw S_pos=") != std::string::npos);
  CHECK(r.out.find("filtered S_pos=") != std::string::npos);

  // Constant input: zero spread before and after.
  const fs::path flat = write_text(dir / "flat.csv", "t,x,y,theta,detected\n0,1,2,0.1,1\n1,1,2,0.1,1\n2,1,2,0.1,1\n");
  r = cli({"filter", "--input", flat.string()});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("# raw S_pos=0 ") != std::string::npos);
  CHECK(r.out.find("# filtered S_pos=0 ") != std::string::npos);

  CHECK(cli({"filter", "--a", "1.2"}).code == kExitUsage);
  CHECK(cli({"filter", "--a", "-0.1"}).code == kExitUsage);

  r = cli({"filter", "--input", (kRoot / "tests" / "data" / "stream_bad.csv").string()});
  CHECK(r.code == kExitUsage);
  CHECK(r.err.find("row 3") != std::string::npos);

  // Same seed, same bytes; --seed overrides the config.
  CliResult s1 = cli({"filter", "--config", cfg("filter_synth.cfg"), "--seed", "11"});
  CliResult s2 = cli({"filter", "--config", cfg("filter_synth.cfg"), "--seed", "11"});
  CliResult s3 = cli({"filter", "--config", cfg("filter_synth.cfg"), "--seed", "12"});
  CHECK(s1.out == s2.out);
  CHECK(s1.out != s3.out);
}

TEST_CASE("enhance subcommand reproduces the golden graymap") {
  const fs::path dir = scratch_dir("enhance");
  const fs::path data = kRoot / "tests" / "data";
  const fs::path out = dir / "out.pgm";
  CHECK(cli({"enhance", "--input", (data / "fixture_3x3.ppm").string(), "--output", out.string(), "--k", "1.5"})
            .code == kExitOk);
  CHECK(slurp(out) == slurp(data / "fixture_3x3_k1.5.pgm"));
  CHECK(cli({"enhance", "--input", (data / "fixture_3x3.ppm").string(), "--output", out.string(), "--k", "0"})
            .code == kExitUsage);
  CHECK(cli({"enhance", "--input", (dir / "none.ppm").string(), "--output", out.string()}).code == kExitUsage);
}

TEST_CASE("installed executable exit codes") {
  const std::string exe = SERVOBENCH_CLI_PATH;
  auto status = [&](const std::string& args) {
    const int raw = std::system((exe + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  };
  const fs::path dir = scratch_dir("exe");
  CHECK(status("analytic --type TypeI --kp 1") == 0);
  CHECK(status("analytic --type TypeII --alpha 1") == 1);
  CHECK(status("run --config " + cfg("type3_default.cfg") + " --out " + dir.string()) == 0);
  CHECK(status("run --config " + cfg("openloop_realproxy.cfg") + " --out " + dir.string()) == 2);
}
