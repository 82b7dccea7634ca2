#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "divexp/mdp.hpp"

namespace divexp {

/// Line-oriented trajectory log. One transition per line:
///
///     run,iter,traj_id,behavior_id,t,state,action,reward,next_state,terminal
///
/// State vectors are written as `;`-separated components with round-trip
/// precision. A header line is written first and skipped on read.
inline constexpr const char* kTrajectoryHeader =
    "run,iter,traj_id,behavior_id,t,state,action,reward,next_state,terminal";

struct LoggedTrajectory {
    std::uint64_t run = 0;
    Trajectory trajectory;
};

void write_trajectories(std::ostream& out, std::uint64_t run, std::span<const Trajectory> trajectories,
                        bool header = true);

/// Groups consecutive lines by (run, traj_id) back into trajectories.
std::vector<LoggedTrajectory> read_trajectories(std::istream& in);

}  // namespace divexp
