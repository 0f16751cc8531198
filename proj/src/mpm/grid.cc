#include "simready/mpm/types.h"

#include <cmath>

#include "simready/common/error.h"

namespace simready::mpm {

GridField::GridField(int resolution, double domain_size)
    : resolution_(resolution), domain_size_(domain_size) {
  if (resolution < 8) throw ConfigError("grid resolution must be at least 8 nodes per axis");
  if (!(domain_size > 0.0)) throw ConfigError("domain size must be positive");
  dx_ = domain_size / (resolution - 1);
  const std::size_t n = static_cast<std::size_t>(resolution) * resolution * resolution;
  mass_.assign(n, 0.0);
  momentum_.assign(n, Vector3::Zero());
  velocity_.assign(n, Vector3::Zero());
  touched_.assign(n, 0);
}

Eigen::Vector3i GridField::coords(std::size_t idx) const {
  const std::size_t r = static_cast<std::size_t>(resolution_);
  return {static_cast<int>(idx / (r * r)), static_cast<int>((idx / r) % r),
          static_cast<int>(idx % r)};
}

void GridField::clear() {
  for (auto idx : active_) {
    mass_[idx] = 0.0;
    momentum_[idx].setZero();
    velocity_[idx].setZero();
    touched_[idx] = 0;
  }
  active_.clear();
}

void GridField::touch(std::size_t idx) {
  if (!touched_[idx]) {
    touched_[idx] = 1;
    active_.push_back(static_cast<std::uint32_t>(idx));
  }
}

double GridField::total_mass() const {
  double m = 0.0;
  for (auto idx : active_) m += mass_[idx];
  return m;
}

Vector3 GridField::total_momentum() const {
  Vector3 p = Vector3::Zero();
  for (auto idx : active_) p += momentum_[idx];
  return p;
}

int SimConfig::frame_count() const {
  return static_cast<int>(std::lround(duration * fps));
}

}  // namespace simready::mpm
