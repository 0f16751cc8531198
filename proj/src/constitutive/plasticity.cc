#include "simready/constitutive/plasticity.h"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "simready/common/error.h"

namespace simready::constitutive {
namespace {

const double kSqrtTwoThirds = std::sqrt(2.0 / 3.0);

// Yield checks tolerate this relative excess so a state returned onto the
// surface is not re-projected because of rounding.
constexpr double kYieldTolerance = 1e-12;

void check_trial(const Matrix3& F) {
  if (!F.allFinite()) throw NumericError("return mapping received a non-finite F");
  if (!(F.determinant() > 0.0)) {
    throw InvertedElementError("return mapping needs det(F_trial) > 0");
  }
}

Matrix3 rebuild(const Svd3& svd, const Vector3& hencky) {
  return svd.U * hencky.array().exp().matrix().asDiagonal() * svd.V.transpose();
}

}  // namespace

double SofteningLaw::yield_stress_at(double eps_p) const {
  return initial_yield_stress * std::max(1.0 - rate * eps_p, min_ratio);
}

Svd3 svd_rotation_variant(const Matrix3& F) {
  Eigen::JacobiSVD<Matrix3> svd(F, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Svd3 out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  if (out.U.determinant() < 0.0) {
    out.U.col(2) *= -1.0;
    out.sigma[2] *= -1.0;
  }
  if (out.V.determinant() < 0.0) {
    out.V.col(2) *= -1.0;
    out.sigma[2] *= -1.0;
  }
  return out;
}

Vector3 hencky_principal_stress(const Vector3& eps, const LameParams& lame) {
  return 2.0 * lame.mu * eps + Vector3::Constant(lame.lambda * eps.sum());
}

double drucker_prager_alpha(double friction_angle) {
  const double s = std::sin(friction_angle);
  return kSqrtTwoThirds * 2.0 * s / (3.0 - s);
}

ReturnMapResult return_map_identity(const Matrix3& F_trial, const PlasticState& state) {
  return {F_trial, state};
}

ReturnMapResult return_map_von_mises(const Matrix3& F_trial, const LameParams& lame,
                                     const PlasticState& state,
                                     const std::optional<SofteningLaw>& softening) {
  check_trial(F_trial);
  if (!(state.sigma_y_current > 0.0)) throw NumericError("yield stress must be positive");

  const Svd3 svd = svd_rotation_variant(F_trial);
  const Vector3 eps = svd.sigma.array().log().matrix();
  const double trace = eps.sum();
  const Vector3 dev = eps - Vector3::Constant(trace / 3.0);
  const double dev_norm = dev.norm();
  const double two_mu = 2.0 * lame.mu;

  // |dev(tau)| = 2 mu |dev(eps)|
  const double yield = kSqrtTwoThirds * state.sigma_y_current;
  if (two_mu * dev_norm <= yield * (1.0 + kYieldTolerance)) return {F_trial, state};

  double delta_gamma = 0.0;
  if (!softening) {
    delta_gamma = dev_norm - yield / two_mu;
  } else {
    // Solve 2mu (|dev| - dg) = sqrt(2/3) sigma_y(eps_p + sqrt(2/3) dg); the
    // right-hand side is piecewise linear with a kink where the floor starts.
    const SofteningLaw& law = *softening;
    const double s0 = law.initial_yield_stress;
    const double c = kSqrtTwoThirds;
    const double e0 = state.eps_p;
    const double floor_solution = dev_norm - c * s0 * law.min_ratio / two_mu;
    const bool has_kink = law.rate > 0.0 && law.min_ratio < 1.0;
    const double e_floor = has_kink ? (1.0 - law.min_ratio) / law.rate : 0.0;
    if (!has_kink || e0 >= e_floor) {
      delta_gamma = has_kink ? floor_solution : dev_norm - c * s0 / two_mu;
    } else {
      const double kink = (e_floor - e0) / c;
      auto residual = [&](double dg) {
        return two_mu * (dev_norm - dg) - c * law.yield_stress_at(e0 + c * dg);
      };
      if (kink < dev_norm && residual(kink) > 0.0) {
        delta_gamma = floor_solution;
      } else {
        delta_gamma = (two_mu * dev_norm - c * s0 * (1.0 - law.rate * e0)) /
                      (two_mu - c * c * s0 * law.rate);
      }
    }
  }
  delta_gamma = std::clamp(delta_gamma, 0.0, dev_norm);

  const Vector3 projected = eps - (delta_gamma / dev_norm) * dev;
  ReturnMapResult out{rebuild(svd, projected), state};
  out.state.eps_p = state.eps_p + kSqrtTwoThirds * delta_gamma;
  if (softening) {
    out.state.sigma_y_current =
        std::min(state.sigma_y_current, softening->yield_stress_at(out.state.eps_p));
  }
  return out;
}

ReturnMapResult return_map_drucker_prager(const Matrix3& F_trial, const LameParams& lame,
                                          double friction_angle, const PlasticState& state) {
  check_trial(F_trial);
  if (!std::isfinite(friction_angle)) throw NumericError("friction angle must be finite");

  const Svd3 svd = svd_rotation_variant(F_trial);
  const Vector3 eps = svd.sigma.array().log().matrix();
  const double trace = eps.sum();
  const Vector3 dev = eps - Vector3::Constant(trace / 3.0);
  const double dev_norm = dev.norm();

  ReturnMapResult out{F_trial, state};
  if (trace > 0.0) {
    // Tension: no cohesion, so the only admissible state is the apex.
    out.F_elastic = svd.U * svd.V.transpose();
    out.state.eps_p += kSqrtTwoThirds * eps.norm();
    return out;
  }

  const double alpha = drucker_prager_alpha(friction_angle);
  const double two_mu = 2.0 * lame.mu;
  const double bulk_term = 3.0 * lame.lambda + two_mu;  // tr(tau) = bulk_term * tr(eps)
  const double cone = two_mu * dev_norm + alpha * bulk_term * trace;
  const double scale = two_mu * dev_norm + std::abs(alpha * bulk_term * trace);
  if (cone <= kYieldTolerance * scale) return out;

  const double delta_gamma = std::clamp(dev_norm + bulk_term / two_mu * trace * alpha, 0.0, dev_norm);
  const Vector3 projected = eps - (delta_gamma / dev_norm) * dev;
  out.F_elastic = rebuild(svd, projected);
  out.state.eps_p += kSqrtTwoThirds * delta_gamma;
  return out;
}

}  // namespace simready::constitutive
