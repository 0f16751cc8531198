#pragma once

#include <limits>
#include <optional>

#include "simready/constitutive/elasticity.h"

namespace simready::constitutive {

struct PlasticState {
  // Accumulated equivalent plastic strain; never decreases.
  double eps_p = 0.0;
  // Current yield stress (Pa). Infinite for materials without a yield surface.
  double sigma_y_current = std::numeric_limits<double>::infinity();
};

// Linear softening used by "von Mises with damage":
//   sigma_y(eps_p) = sigma_y0 * max(1 - rate * eps_p, min_ratio)
struct SofteningLaw {
  double initial_yield_stress = 0.0;
  double rate = 5.0;
  double min_ratio = 0.1;

  double yield_stress_at(double eps_p) const;
};

struct ReturnMapResult {
  Matrix3 F_elastic;
  PlasticState state;
};

// Rotation-variant SVD: U and V are proper rotations, so for det(F) > 0 every
// singular value is positive.
struct Svd3 {
  Matrix3 U;
  Vector3 sigma;
  Matrix3 V;
};
Svd3 svd_rotation_variant(const Matrix3& F);

// Principal Kirchhoff stress of the Hencky model: 2 mu eps + lambda tr(eps) 1.
Vector3 hencky_principal_stress(const Vector3& hencky_strain, const LameParams& lame);

// Friction coefficient of the cohesionless Drucker-Prager cone:
//   sqrt(2/3) * 2 sin(phi) / (3 - sin(phi))
double drucker_prager_alpha(double friction_angle);

ReturnMapResult return_map_identity(const Matrix3& F_trial, const PlasticState& state);

// Radial return in principal Hencky strain against
// |dev(tau)|_F <= sqrt(2/3) sigma_y. With a softening law the projection
// targets the softened yield stress at the updated plastic strain, so the
// result is admissible for the returned state.
ReturnMapResult return_map_von_mises(const Matrix3& F_trial, const LameParams& lame,
                                     const PlasticState& state,
                                     const std::optional<SofteningLaw>& softening);

// Cohesionless Drucker-Prager in principal Hencky strain: tensile trial
// states collapse to the cone apex, states outside the cone are projected
// onto its surface along the deviatoric direction.
ReturnMapResult return_map_drucker_prager(const Matrix3& F_trial, const LameParams& lame,
                                          double friction_angle, const PlasticState& state);

}  // namespace simready::constitutive
