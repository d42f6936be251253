#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "servobench/plant_sim.hpp"

namespace servobench {

/// Process exit codes.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitNotAligned = 2,
  kExitDiverged = 3,
};

struct RunReportRow {
  std::string method;
  std::string env;
  ServoRunResult result;
};

/// Table with final error (cm, cm, deg), aligning time and result columns.
/// Timeout rows print "Timeout" in place of a time.
std::string format_run_report(const std::vector<RunReportRow>& rows);

/// Entry point shared by the executable and the tests. `args` excludes the
/// program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace servobench
