#pragma once

#include <Eigen/Core>

namespace simready::constitutive {

using Matrix3 = Eigen::Matrix3d;
using Vector3 = Eigen::Vector3d;

struct LameParams {
  double mu = 0.0;      // shear modulus, Pa
  double lambda = 0.0;  // first Lame parameter, Pa
};

// mu = E / (2(1+nu)), lambda = E nu / ((1+nu)(1-2nu)).
// Throws ConfigError for nu >= 0.5 (incompressible) or E <= 0.
LameParams lame_from_moduli(double youngs_modulus, double poisson_ratio);

// First Piola-Kirchhoff stress of compressible neo-Hookean elasticity:
//   P = mu (F - F^-T) + lambda ln(J) F^-T
// Throws InvertedElementError when det(F) <= 0.
Matrix3 stress_neo_hookean(const Matrix3& F, const LameParams& lame);

// St. Venant-Kirchhoff: P = F (2 mu G + lambda tr(G) I), G = (F^T F - I) / 2.
Matrix3 stress_stvk(const Matrix3& F, const LameParams& lame);

}  // namespace simready::constitutive
