#pragma once

#include <span>
#include <vector>

#include "simready/common/parallel.h"
#include "simready/mpm/types.h"

namespace simready::mpm {

// Quadratic B-spline weights along one axis for a particle at `x` (in cells).
struct AxisWeights {
  int base;
  double w[3];
};
AxisWeights bspline_weights(double x_over_dx);

// First Piola-Kirchhoff stress of the particle's elastic model.
Matrix3 particle_stress(const ParticleState& p);

// MLS-MPM scatter: mass and APIC momentum m (v + C (x_i - x_p)) plus the
// stress impulse -dt V0 (4/dx^2) P F^T (x_i - x_p). Clears the grid first.
// Throws OutOfDomainError for a particle whose stencil leaves the grid.
void particle_to_grid(std::span<const ParticleState> particles, GridField& grid, double dt,
                      const WorkerPool& pool, bool deterministic = true);

// Node velocity = momentum/mass + dt (gravity + external). Then the ground
// plane applies Coulomb friction and the walls apply free slip.
void grid_update(GridField& grid, double dt, const Vector3& gravity,
                 const Boundaries& boundaries, const Vector3& external_acceleration);

struct G2pOptions {
  double time = 0.0;  // start of the step, for kinematic overrides
  double softening_rate = 5.0;
  double softening_min_ratio = 0.1;
  double min_singular_value = 0.05;
  double max_singular_value = 4.0;
  bool clamp_positions = true;  // keep particles inside the walls
  const Forcing* forcing = nullptr;
};

// Gathers v and C, advects, updates F, applies each particle's return
// mapping and the singular-value clamp. Returns the number of clamps.
std::uint64_t grid_to_particle(const GridField& grid, std::span<ParticleState> particles,
                               double dt, const G2pOptions& options, const WorkerPool& pool);

// Applies the material's plastic return mapping followed by the clamp.
// Returns true when the clamp changed F.
bool apply_plasticity(ParticleState& p, const Matrix3& F_trial, const G2pOptions& options);

}  // namespace simready::mpm
