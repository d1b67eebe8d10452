#pragma once

#include <string>

#include "daestab/integrate.hpp"

namespace daestab {

std::string status_name(TrajectoryStatus s);

/// Write `t,x1,...,xn,constraint_residual,dae_residual,step_size` rows at
/// full (17 significant digit) precision, with the terminal status in a
/// trailing comment line.
void write_trajectory_csv(const std::string& path, const Trajectory& traj);

} // namespace daestab
