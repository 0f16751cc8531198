#include "simready/mpm/transfer.h"

#include <atomic>
#include <cmath>

#include <Eigen/LU>

#include "simready/common/error.h"

namespace simready::mpm {
namespace {

using assets::PlasticModel;

// Separable 3x3x3 stencil: node (i, j, k) has weight wx[i] wy[j] wz[k] and
// offset x_node - x_p = (ox[i], oy[j], oz[k]).
struct NodeStencil {
  int base[3];
  double w[3][3];
  double offset[3][3];
};

NodeStencil node_stencil(const Vector3& x, double dx) {
  NodeStencil s;
  for (int a = 0; a < 3; ++a) {
    const AxisWeights aw = bspline_weights(x[a] / dx);
    s.base[a] = aw.base;
    for (int i = 0; i < 3; ++i) {
      s.w[a][i] = aw.w[i];
      s.offset[a][i] = (aw.base + i) * dx - x[a];
    }
  }
  return s;
}

struct Scatter {
  NodeStencil nodes;
  Matrix3 affine;  // stress impulse + m C
  Vector3 momentum;
  double mass;
};

bool in_domain(const AxisWeights& w, int resolution) {
  return w.base >= 0 && w.base + 2 <= resolution - 1;
}

bool needs_clamp(const Matrix3& F, double lo, double hi) {
  // sigma_max <= |F|_F and sigma_min >= 2 det / |F|_F^2 bound the spectrum
  // without an SVD.
  const double fro2 = F.squaredNorm();
  const double det = F.determinant();
  if (!(det > 0.0)) return true;
  return fro2 > hi * hi || 2.0 * det / fro2 < lo;
}

bool clamp_singular_values(Matrix3& F, double lo, double hi) {
  if (!needs_clamp(F, lo, hi)) return false;
  const auto svd = constitutive::svd_rotation_variant(F);
  const Vector3 clamped = svd.sigma.cwiseMax(lo).cwiseMin(hi);
  if (clamped == svd.sigma) return false;
  F = svd.U * clamped.asDiagonal() * svd.V.transpose();
  return true;
}

}  // namespace

AxisWeights bspline_weights(double x) {
  AxisWeights out;
  out.base = static_cast<int>(std::floor(x - 0.5));
  const double fx = x - out.base;
  out.w[0] = 0.5 * (1.5 - fx) * (1.5 - fx);
  out.w[1] = 0.75 - (fx - 1.0) * (fx - 1.0);
  out.w[2] = 0.5 * (fx - 0.5) * (fx - 0.5);
  return out;
}

Matrix3 particle_stress(const ParticleState& p) {
  switch (assets::models_for(p.material.behavior).elastic) {
    case assets::ElasticModel::kNeoHookean:
      return constitutive::stress_neo_hookean(p.F, p.lame);
    case assets::ElasticModel::kStVK:
      return constitutive::stress_stvk(p.F, p.lame);
  }
  return Matrix3::Zero();
}

void particle_to_grid(std::span<const ParticleState> particles, GridField& grid, double dt,
                      const WorkerPool& pool, bool deterministic) {
  grid.clear();
  const double dx = grid.dx();
  for (std::size_t i = 0; i < particles.size(); ++i) {
    const Vector3& x = particles[i].x;
    if (!x.allFinite()) throw OutOfDomainError(i);
    for (int a = 0; a < 3; ++a) {
      if (!in_domain(bspline_weights(x[a] / dx), grid.resolution())) throw OutOfDomainError(i);
    }
  }

  // Reused across steps; only grows.
  thread_local std::vector<Scatter> scatters;
  if (scatters.size() < particles.size()) scatters.resize(particles.size());
  const double d_inv = 4.0 / (dx * dx);
  pool.parallel_for(particles.size(), 64, [&](std::size_t i) {
    const ParticleState& p = particles[i];
    Scatter& s = scatters[i];
    s.nodes = node_stencil(p.x, dx);
    s.affine = -dt * p.volume0 * d_inv * particle_stress(p) * p.F.transpose() + p.mass * p.C;
    s.momentum = p.mass * p.v;
    s.mass = p.mass;
  });

  // Visits the 27 nodes with their mass and momentum contributions; the
  // affine term A (x_i - x_p) is accumulated one axis at a time.
  auto visit = [&grid](const Scatter& s, auto&& add) {
    const NodeStencil& n = s.nodes;
    for (int i = 0; i < 3; ++i) {
      const Vector3 pi = s.momentum + s.affine.col(0) * n.offset[0][i];
      for (int j = 0; j < 3; ++j) {
        const Vector3 pij = pi + s.affine.col(1) * n.offset[1][j];
        const double wij = n.w[0][i] * n.w[1][j];
        const std::size_t row = grid.index(n.base[0] + i, n.base[1] + j, n.base[2]);
        for (int k = 0; k < 3; ++k) {
          const double w = wij * n.w[2][k];
          add(row + k, w * s.mass, w * (pij + s.affine.col(2) * n.offset[2][k]));
        }
      }
    }
  };

  auto& mass = grid.mass();
  auto& momentum = grid.momentum();
  if (deterministic) {
    // Fixed particle order makes the sums independent of the worker count.
    for (std::size_t i = 0; i < particles.size(); ++i) {
      visit(scatters[i], [&](std::size_t idx, double dm, const Vector3& dp) {
        grid.touch(idx);
        mass[idx] += dm;
        momentum[idx] += dp;
      });
    }
    return;
  }

  for (std::size_t i = 0; i < particles.size(); ++i) {
    visit(scatters[i], [&](std::size_t idx, double, const Vector3&) { grid.touch(idx); });
  }
  pool.parallel_for(particles.size(), 64, [&](std::size_t i) {
    visit(scatters[i], [&](std::size_t idx, double dm, const Vector3& dp) {
      std::atomic_ref<double>(mass[idx]).fetch_add(dm, std::memory_order_relaxed);
      for (int a = 0; a < 3; ++a) {
        std::atomic_ref<double>(momentum[idx][a]).fetch_add(dp[a], std::memory_order_relaxed);
      }
    });
  });
}

void grid_update(GridField& grid, double dt, const Vector3& gravity,
                 const Boundaries& boundaries, const Vector3& external_acceleration) {
  const Vector3 accel = gravity + external_acceleration;
  const int res = grid.resolution();
  const double half = 0.5 * grid.domain_size();
  const GroundPlane& ground = boundaries.ground;
  const Vector3 anchor(half, ground.height, half);
  const Vector3 n = ground.normal.normalized();

  auto& velocity = grid.velocity();
  for (auto idx : grid.active()) {
    const double m = grid.mass()[idx];
    if (m <= 0.0) continue;
    Vector3 v = grid.momentum()[idx] / m + dt * accel;

    if (ground.enabled && n.dot(grid.node_position(idx) - anchor) <= 0.0) {
      const double vn = v.dot(n);
      if (vn < 0.0) {
        const Vector3 vt = v - vn * n;
        const double vt_norm = vt.norm();
        v = vt_norm > 0.0 ? Vector3(vt * std::max(0.0, 1.0 - ground.friction * -vn / vt_norm))
                          : Vector3::Zero();
      }
    }
    if (boundaries.walls) {
      const Eigen::Vector3i c = grid.coords(idx);
      for (int a = 0; a < 3; ++a) {
        if (c[a] < boundaries.wall_cells && v[a] < 0.0) v[a] = 0.0;
        if (c[a] > res - 1 - boundaries.wall_cells && v[a] > 0.0) v[a] = 0.0;
      }
    }
    velocity[idx] = v;
  }
}

bool apply_plasticity(ParticleState& p, const Matrix3& F_trial, const G2pOptions& options) {
  if (!F_trial.allFinite()) throw NumericError("deformation gradient became non-finite");
  Matrix3 F = F_trial;
  bool clamped = false;
  // Inverted trial states cannot enter a Hencky-strain return mapping.
  if (!(F.determinant() > 0.0)) {
    clamped = clamp_singular_values(F, options.min_singular_value, options.max_singular_value);
  }

  const auto& m = p.material;
  switch (assets::models_for(m.behavior).plastic) {
    case PlasticModel::kIdentity: {
      auto r = constitutive::return_map_identity(F, p.plastic);
      F = r.F_elastic;
      p.plastic = r.state;
      break;
    }
    case PlasticModel::kVonMisesWithDamage: {
      const constitutive::SofteningLaw law{m.yield_stress.value(), options.softening_rate,
                                           options.softening_min_ratio};
      auto r = constitutive::return_map_von_mises(F, p.lame, p.plastic, law);
      F = r.F_elastic;
      p.plastic = r.state;
      break;
    }
    case PlasticModel::kVonMises: {
      auto r = constitutive::return_map_von_mises(F, p.lame, p.plastic, std::nullopt);
      F = r.F_elastic;
      p.plastic = r.state;
      break;
    }
    case PlasticModel::kDruckerPrager: {
      auto r = constitutive::return_map_drucker_prager(F, p.lame, m.friction_angle.value(),
                                                       p.plastic);
      F = r.F_elastic;
      p.plastic = r.state;
      break;
    }
  }
  clamped = clamp_singular_values(F, options.min_singular_value, options.max_singular_value) ||
            clamped;
  p.F = F;
  return clamped;
}

std::uint64_t grid_to_particle(const GridField& grid, std::span<ParticleState> particles,
                               double dt, const G2pOptions& options, const WorkerPool& pool) {
  const double dx = grid.dx();
  const double d_inv = 4.0 / (dx * dx);
  const double lo = dx, hi = grid.domain_size() - dx;
  const auto& velocity = grid.velocity();
  std::atomic<std::uint64_t> clamps{0};

  pool.parallel_for(particles.size(), 64, [&](std::size_t pi) {
    ParticleState& p = particles[pi];
    const NodeStencil n = node_stencil(p.x, dx);
    Vector3 v = Vector3::Zero();
    Matrix3 B = Matrix3::Zero();
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const double wij = n.w[0][i] * n.w[1][j];
        const std::size_t row = grid.index(n.base[0] + i, n.base[1] + j, n.base[2]);
        Vector3 vij = Vector3::Zero(), vij_z = Vector3::Zero();
        for (int k = 0; k < 3; ++k) {
          const Vector3 wv = n.w[2][k] * velocity[row + k];
          vij += wv;
          vij_z += wv * n.offset[2][k];
        }
        vij *= wij;
        v += vij;
        B.col(0) += vij * n.offset[0][i];
        B.col(1) += vij * n.offset[1][j];
        B.col(2) += wij * vij_z;
      }
    }
    p.C = d_inv * B;
    p.v = v;
    if (options.forcing && options.forcing->kinematic_velocity) {
      if (auto prescribed = options.forcing->kinematic_velocity(options.time, p)) p.v = *prescribed;
    }

    const Matrix3 F_trial = (Matrix3::Identity() + dt * p.C) * p.F;
    if (apply_plasticity(p, F_trial, options)) clamps.fetch_add(1, std::memory_order_relaxed);

    p.x += dt * p.v;
    if (options.clamp_positions) p.x = p.x.cwiseMax(lo).cwiseMin(hi);
  });
  return clamps.load();
}

}  // namespace simready::mpm
