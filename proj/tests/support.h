#pragma once

#include <cstdint>
#include <random>
#include <string>

#include <Eigen/Geometry>

#include "simready/assets/asset.h"

namespace simready::testing {

// Regular lattice of n^3 points spanning the unit box, one part, one material.
inline assets::SimReadyAsset make_cube_asset(int n, double world_scale,
                                             const assets::MaterialParams& material,
                                             const std::string& id = "cube") {
  assets::SimReadyAsset a;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      for (int k = 0; k < n; ++k) {
        a.points.emplace_back(i / double(n - 1), j / double(n - 1), k / double(n - 1));
        a.colors.emplace_back(0.5, 0.5, 0.5);
        a.part_labels.push_back(0);
        a.materials.push_back(material);
      }
    }
  }
  a.metadata.asset_id = id;
  a.metadata.category = "box";
  a.metadata.parts = {{"body", "plastic", ""}};
  a.metadata.world_scale = world_scale;
  return a;
}

inline assets::MaterialParams elastic(double E, double nu = 0.3, double rho = 1000.0) {
  assets::MaterialParams m;
  m.youngs_modulus = E;
  m.poisson_ratio = nu;
  m.density = rho;
  return m;
}

inline Eigen::Matrix3d random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Eigen::Quaterniond q(g(rng), g(rng), g(rng), g(rng));
  return q.normalized().toRotationMatrix();
}

// F = R1 diag(s) R2 with singular values drawn log-uniformly in [lo, hi].
inline Eigen::Matrix3d random_deformation(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  const Eigen::Vector3d s(std::exp(u(rng)), std::exp(u(rng)), std::exp(u(rng)));
  return random_rotation(rng) * s.asDiagonal() * random_rotation(rng);
}

}  // namespace simready::testing
