#include "servobench/csv_io.hpp"

#include <istream>
#include <ostream>
#include <sstream>

#include "servobench/config.hpp"
#include "servobench/errors.hpp"

namespace servobench {

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectorySample>& traj) {
  out << kTrajectoryHeader << '\n';
  for (const TrajectorySample& s : traj) {
    out << fmt9(s.t) << ',' << fmt9(s.ex) << ',' << fmt9(s.ey) << ',' << fmt9(s.etheta) << ','
        << fmt9(s.raw.vx) << ',' << fmt9(s.raw.vy) << ',' << fmt9(s.raw.omega) << ',' << fmt9(s.actuated.vx) << ','
        << fmt9(s.actuated.vy) << ',' << fmt9(s.actuated.omega) << '\n';
  }
}

void write_estimates_csv(std::ostream& out, const EstimateSequence& seq) {
  out << kEstimateHeader << '\n';
  for (const EstimateSample& s : seq) {
    out << fmt9(s.t) << ',' << fmt9(s.x) << ',' << fmt9(s.y) << ',' << fmt9(s.theta) << ','
        << (s.detected ? 1 : 0) << '\n';
  }
}

EstimateSequence read_estimates_csv(std::istream& in) {
  EstimateSequence seq;
  std::string line;
  int row = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("t,", 0) == 0) continue;
    }
    std::istringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    try {
      while (std::getline(ss, cell, ',')) {
        std::size_t pos = 0;
        vals.push_back(std::stod(cell, &pos));
        if (pos != cell.size()) throw std::invalid_argument(cell);
      }
    } catch (const std::exception&) {
      throw InvalidArgument("row " + std::to_string(row) + ": malformed value '" + cell + "'");
    }
    if (vals.size() != 5) {
      throw InvalidArgument("row " + std::to_string(row) + ": expected 5 columns, got " + std::to_string(vals.size()));
    }
    if (vals[4] != 0.0 && vals[4] != 1.0) {
      throw InvalidArgument("row " + std::to_string(row) + ": detected flag must be 0 or 1");
    }
    seq.push_back({vals[0], vals[1], vals[2], 0.0, vals[3], vals[4] == 1.0});
  }
  return seq;
}

}  // namespace servobench
