#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "simready/assets/asset.h"
#include "simready/common/parallel.h"
#include "simready/mpm/types.h"
#include "simready/scenarios/scenario.h"

namespace simready::mpm {

struct SimState {
  std::vector<ParticleState> particles;
  GridField grid;
  Boundaries boundaries;
  Forcing forcing;
  double time = 0.0;
  Diagnostics diagnostics;
};

// Particles at rest in object space (normalized points scaled by the asset's
// world scale). Each particle gets volume0 = occupied-voxel volume / N at the
// grid spacing and mass = rho * volume0.
std::vector<ParticleState> initialize_particles(const assets::SimReadyAsset& asset,
                                                const SimConfig& config);

SimState make_state(std::vector<ParticleState> particles, const Boundaries& boundaries,
                    const SimConfig& config);

// One explicit step: P2G, grid update, G2P. Advances state.time by dt.
void step(SimState& state, const SimConfig& config, double dt, const WorkerPool& pool);

// Largest stable step: cfl * dx / (max |v| + max sqrt(E / rho)).
double cfl_time_step(std::span<const ParticleState> particles, const SimConfig& config);

struct Frame {
  double time = 0.0;
  std::vector<Vector3> positions;
  std::vector<Vector3> velocities;  // empty unless requested
};

struct Trajectory {
  std::string asset_id;
  std::string scenario;     // canonical JSON of the scenario spec
  std::string config_hash;  // hex digest of the canonical SimConfig
  double fps = 24.0;
  std::vector<Frame> frames;

  std::size_t particle_count() const {
    return frames.empty() ? 0 : frames.front().positions.size();
  }
};

struct RunStats {
  std::uint64_t steps = 0;
  std::uint64_t singular_value_clamps = 0;
  double wall_seconds = 0.0;
  double min_dt = 0.0;
};

struct RunOptions {
  bool record_velocities = false;
  RunStats* stats = nullptr;
  // Polled between substeps; a set flag aborts with simready::Error.
  const std::atomic<bool>* cancel = nullptr;
};

// Emits round(duration * fps) frames at t = k / fps, k = 0, 1, ...; frame 0
// is the initial state. Throws ConfigError when a fixed dt violates CFL.
Trajectory run_simulation(const assets::SimReadyAsset& asset,
                          const scenarios::ScenarioSpec& scenario, const SimConfig& config,
                          const RunOptions& options = {});

}  // namespace simready::mpm
