#pragma once

#include <iosfwd>
#include <string>

#include "servobench/perception.hpp"
#include "servobench/plant_sim.hpp"

namespace servobench {

inline constexpr const char* kTrajectoryHeader =
    "t,ex,ey,etheta,vx_raw,vy_raw,omega_raw,vx_act,vy_act,omega_act";
inline constexpr const char* kEstimateHeader = "t,x,y,theta,detected";

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectorySample>& trajectory);

void write_estimates_csv(std::ostream& out, const EstimateSequence& seq);

/// Parses "t,x,y,theta,detected" rows (leading header optional). A malformed row
/// raises InvalidArgument naming its 1-based line number.
EstimateSequence read_estimates_csv(std::istream& in);

}  // namespace servobench
