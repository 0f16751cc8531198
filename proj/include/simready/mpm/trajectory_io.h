#pragma once

#include <filesystem>
#include <iosfwd>

#include "simready/mpm/simulation.h"

namespace simready::mpm {

// `.trj` layout:
//   "SRTRJ 1\n"
//   one-line JSON header: asset_id, scenario, config_hash, fps, frame_count,
//   particle_count, has_velocities
//   per frame: f64 time, particle_count x 3 f32 positions, then the same
//   block of velocities when has_velocities is set. Little-endian.
// Positions are stored as float32, so a read returns the rounded values.
void write_trajectory(std::ostream& os, const Trajectory& trajectory);
Trajectory read_trajectory(std::istream& is);

void save_trajectory(const std::filesystem::path& path, const Trajectory& trajectory);
Trajectory load_trajectory(const std::filesystem::path& path);

}  // namespace simready::mpm
