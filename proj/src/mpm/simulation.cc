#include "simready/mpm/simulation.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <unordered_set>

#include "simready/common/error.h"
#include "simready/mpm/config_io.h"
#include "simready/mpm/transfer.h"
#include "simready/scenarios/scenario_io.h"

namespace simready::mpm {
namespace {

std::uint64_t voxel_key(const Vector3& x, double dx) {
  const auto cell = [&](double c) {
    return static_cast<std::uint64_t>(static_cast<std::int64_t>(std::floor(c / dx)) + (1 << 20));
  };
  return (cell(x.x()) << 42) | (cell(x.y()) << 21) | cell(x.z());
}

Frame capture(const SimState& state, bool velocities) {
  Frame f;
  f.time = state.time;
  f.positions.reserve(state.particles.size());
  for (const auto& p : state.particles) f.positions.push_back(p.x);
  if (velocities) {
    f.velocities.reserve(state.particles.size());
    for (const auto& p : state.particles) f.velocities.push_back(p.v);
  }
  return f;
}

}  // namespace

std::vector<ParticleState> initialize_particles(const assets::SimReadyAsset& asset,
                                                const SimConfig& config) {
  assets::validate_asset(asset);
  const double scale = asset.metadata.world_scale;
  const double dx = config.dx();
  const std::size_t n = asset.size();

  std::unordered_set<std::uint64_t> occupied;
  for (const auto& x : asset.points) occupied.insert(voxel_key(x * scale, dx));
  const double volume0 = static_cast<double>(occupied.size()) * dx * dx * dx / n;

  std::vector<ParticleState> particles(n);
  for (std::size_t i = 0; i < n; ++i) {
    ParticleState& p = particles[i];
    const auto& m = asset.materials[i];
    p.x = asset.points[i] * scale;
    p.material = m;
    p.volume0 = volume0;
    p.mass = m.density * volume0;
    p.lame = constitutive::lame_from_moduli(m.youngs_modulus, m.poisson_ratio);
    if (assets::requires_yield_stress(m.behavior)) p.plastic.sigma_y_current = *m.yield_stress;
  }
  return particles;
}

SimState make_state(std::vector<ParticleState> particles, const Boundaries& boundaries,
                    const SimConfig& config) {
  SimState state;
  state.particles = std::move(particles);
  state.grid = GridField(config.grid_resolution, config.domain_size);
  state.boundaries = boundaries;
  return state;
}

void step(SimState& state, const SimConfig& config, double dt, const WorkerPool& pool) {
  const Vector3 external = state.forcing.external_acceleration
                               ? state.forcing.external_acceleration(state.time)
                               : Vector3::Zero();
  particle_to_grid(state.particles, state.grid, dt, pool, config.deterministic);
  grid_update(state.grid, dt, config.gravity, state.boundaries, external);

  G2pOptions options;
  options.time = state.time;
  options.softening_rate = config.softening_rate;
  options.softening_min_ratio = config.softening_min_ratio;
  options.min_singular_value = config.min_singular_value;
  options.max_singular_value = config.max_singular_value;
  options.clamp_positions = state.boundaries.walls;
  options.forcing = &state.forcing;
  state.diagnostics.singular_value_clamps +=
      grid_to_particle(state.grid, state.particles, dt, options, pool);
  state.time += dt;
  ++state.diagnostics.steps;
}

double cfl_time_step(std::span<const ParticleState> particles, const SimConfig& config) {
  double v_max = 0.0, c_max = 0.0;
  for (const auto& p : particles) {
    v_max = std::max(v_max, p.v.norm());
    c_max = std::max(c_max, std::sqrt(p.material.youngs_modulus / p.material.density));
  }
  const double speed = v_max + c_max;
  if (!(speed > 0.0)) return std::numeric_limits<double>::infinity();
  return config.cfl * config.dx() / speed;
}

Trajectory run_simulation(const assets::SimReadyAsset& asset,
                          const scenarios::ScenarioSpec& scenario, const SimConfig& config,
                          const RunOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  validate_config(config);
  auto init = scenarios::init_state_for_scenario(asset, scenario, config);
  SimState state = make_state(std::move(init.particles), init.boundaries, config);
  state.forcing = scenarios::forcing_for(scenario);
  const WorkerPool pool(config.workers);

  Trajectory trajectory;
  trajectory.asset_id = asset.metadata.asset_id;
  trajectory.scenario = scenarios::canonical_scenario(scenario);
  trajectory.config_hash = config_hash(config);
  trajectory.fps = config.fps;

  const int frames = config.frame_count();
  trajectory.frames.reserve(frames);
  trajectory.frames.push_back(capture(state, options.record_velocities));

  double min_dt = std::numeric_limits<double>::infinity();
  for (int k = 1; k < frames; ++k) {
    const double frame_end = k / config.fps;
    const double span = frame_end - state.time;
    const double cfl_dt = cfl_time_step(state.particles, config);
    if (!config.adaptive_dt && config.dt > cfl_dt) {
      throw ConfigError("dt = " + std::to_string(config.dt) +
                        " s violates the CFL bound; use dt <= " + std::to_string(cfl_dt) +
                        " s or enable adaptive_dt");
    }
    const double dt_max = config.adaptive_dt ? std::min(config.dt, cfl_dt) : config.dt;
    const auto substeps = static_cast<long>(std::ceil(span / dt_max * (1.0 - 1e-12)));
    const double dt = span / static_cast<double>(std::max(1L, substeps));
    min_dt = std::min(min_dt, dt);
    for (long s = 0; s < std::max(1L, substeps); ++s) {
      if (options.cancel && options.cancel->load()) throw Error("simulation cancelled");
      step(state, config, dt, pool);
    }
    state.time = frame_end;
    trajectory.frames.push_back(capture(state, options.record_velocities));
  }

  if (options.stats) {
    options.stats->steps = state.diagnostics.steps;
    options.stats->singular_value_clamps = state.diagnostics.singular_value_clamps;
    options.stats->min_dt = std::isfinite(min_dt) ? min_dt : 0.0;
    options.stats->wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  }
  return trajectory;
}

}  // namespace simready::mpm
