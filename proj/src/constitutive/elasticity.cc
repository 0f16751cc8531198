#include "simready/constitutive/elasticity.h"

#include <cmath>
#include <Eigen/LU>

#include "simready/common/error.h"

namespace simready::constitutive {

LameParams lame_from_moduli(double youngs_modulus, double poisson_ratio) {
  if (!(poisson_ratio < 0.5)) {
    throw ConfigError("Poisson's ratio " + std::to_string(poisson_ratio) +
                      " reaches the incompressible limit 0.5");
  }
  if (!(poisson_ratio > -1.0)) throw ConfigError("Poisson's ratio must exceed -1");
  if (!(youngs_modulus > 0.0)) throw ConfigError("Young's modulus must be positive");
  const double E = youngs_modulus, nu = poisson_ratio;
  return {E / (2.0 * (1.0 + nu)), E * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))};
}

Matrix3 stress_neo_hookean(const Matrix3& F, const LameParams& lame) {
  const double J = F.determinant();
  if (!(J > 0.0)) throw InvertedElementError("neo-Hookean stress needs det(F) > 0");
  const Matrix3 F_inv_t = F.inverse().transpose();
  return lame.mu * (F - F_inv_t) + lame.lambda * std::log(J) * F_inv_t;
}

Matrix3 stress_stvk(const Matrix3& F, const LameParams& lame) {
  const Matrix3 G = 0.5 * (F.transpose() * F - Matrix3::Identity());
  return F * (2.0 * lame.mu * G + lame.lambda * G.trace() * Matrix3::Identity());
}

}  // namespace simready::constitutive
