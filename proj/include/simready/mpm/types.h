#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "simready/assets/material.h"
#include "simready/constitutive/elasticity.h"
#include "simready/constitutive/plasticity.h"

namespace simready::mpm {

using Vector3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;

struct ParticleState {
  Vector3 x = Vector3::Zero();  // m
  Vector3 v = Vector3::Zero();  // m/s
  Matrix3 F = Matrix3::Identity();
  Matrix3 C = Matrix3::Zero();  // affine velocity, 1/s
  double mass = 0.0;            // kg
  double volume0 = 0.0;         // m^3
  assets::MaterialParams material;
  constitutive::PlasticState plastic;

  // Derived from `material` at initialization.
  constitutive::LameParams lame;
  // Velocity is prescribed while a kinematic override is active.
  bool handle = false;
};

// Dense node storage with an explicit list of nodes touched this step, so
// per-step work scales with the occupied region rather than the full grid.
class GridField {
 public:
  GridField() = default;
  GridField(int resolution, double domain_size);

  int resolution() const { return resolution_; }
  double dx() const { return dx_; }
  double domain_size() const { return domain_size_; }
  std::size_t node_count() const { return mass_.size(); }

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * resolution_ + j) * resolution_ + k;
  }
  Eigen::Vector3i coords(std::size_t idx) const;
  Vector3 node_position(std::size_t idx) const { return coords(idx).cast<double>() * dx_; }

  // Zeroes every touched node and empties the active list.
  void clear();
  // Registers a node as active.
  void touch(std::size_t idx);

  std::vector<double>& mass() { return mass_; }
  const std::vector<double>& mass() const { return mass_; }
  std::vector<Vector3>& momentum() { return momentum_; }
  const std::vector<Vector3>& momentum() const { return momentum_; }
  std::vector<Vector3>& velocity() { return velocity_; }
  const std::vector<Vector3>& velocity() const { return velocity_; }
  const std::vector<std::uint32_t>& active() const { return active_; }
  std::vector<std::uint32_t>& active() { return active_; }
  std::vector<std::uint8_t>& touched_flags() { return touched_; }

  double total_mass() const;
  Vector3 total_momentum() const;

 private:
  int resolution_ = 0;
  double dx_ = 0.0;
  double domain_size_ = 0.0;
  std::vector<double> mass_;
  std::vector<Vector3> momentum_;
  std::vector<Vector3> velocity_;
  std::vector<std::uint8_t> touched_;
  std::vector<std::uint32_t> active_;
};

struct GroundPlane {
  bool enabled = true;
  double height = 0.1;                      // m, plane passes through (L/2, height, L/2)
  Vector3 normal = Vector3(0.0, 1.0, 0.0);  // unit, pointing into the free half-space
  double friction = 0.4;                    // Coulomb coefficient
  friend bool operator==(const GroundPlane&, const GroundPlane&) = default;
};

struct Boundaries {
  GroundPlane ground;
  bool walls = true;
  int wall_cells = 3;
  friend bool operator==(const Boundaries&, const Boundaries&) = default;
};

struct SimConfig {
  int grid_resolution = 64;  // nodes per axis
  double domain_size = 2.0;  // m, cube [0, domain_size]^3
  double dt = 1e-4;          // s, upper bound on the step
  bool adaptive_dt = true;   // substep to satisfy the CFL bound
  double cfl = 0.4;
  Vector3 gravity = Vector3(0.0, -9.8, 0.0);
  GroundPlane ground;
  bool walls = true;
  double fps = 24.0;
  double duration = 1.0;  // s
  bool deterministic = true;
  int workers = 0;  // 0: hardware concurrency
  // Softening of "von Mises with damage".
  double softening_rate = 5.0;
  double softening_min_ratio = 0.1;
  // Singular values of F are kept in this range after plasticity.
  double min_singular_value = 0.05;
  double max_singular_value = 4.0;

  double dx() const { return domain_size / (grid_resolution - 1); }
  int frame_count() const;
  friend bool operator==(const SimConfig&, const SimConfig&) = default;
};

// Time-dependent drivers supplied by the scenario.
struct Forcing {
  std::function<Vector3(double t)> external_acceleration;
  std::function<std::optional<Vector3>(double t, const ParticleState& p)> kinematic_velocity;
};

struct Diagnostics {
  std::uint64_t steps = 0;
  std::uint64_t singular_value_clamps = 0;
};

}  // namespace simready::mpm
