#include "simready/assets/material.h"

#include <cmath>
#include <sstream>

#include "simready/common/error.h"

namespace simready::assets {

std::string_view to_string(BehaviorType b) {
  switch (b) {
    case BehaviorType::kM0: return "M0";
    case BehaviorType::kM1: return "M1";
    case BehaviorType::kM2: return "M2";
    case BehaviorType::kM3: return "M3";
  }
  return "M?";
}

BehaviorType behavior_from_string(std::string_view s) {
  for (BehaviorType b : kAllBehaviors) {
    if (to_string(b) == s) return b;
  }
  throw ParseError("behavior", "unknown behavior type '" + std::string(s) + "'");
}

std::optional<BehaviorType> behavior_from_index(std::int64_t i) {
  if (i < 0 || i > 3) return std::nullopt;
  return static_cast<BehaviorType>(i);
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::vector<std::string> check_material(const MaterialParams& m) {
  std::vector<std::string> out;
  const double e = m.youngs_modulus;
  if (!std::isfinite(e) || e < kMinYoungsModulus || e > kMaxYoungsModulus) {
    out.push_back("E=" + fmt(e) + " outside [1e4, 1e13] Pa");
  }
  const double nu = m.poisson_ratio;
  if (!std::isfinite(nu) || nu < kMinPoissonRatio || nu > kMaxPoissonRatio) {
    out.push_back("nu=" + fmt(nu) + " outside [0, 0.499]");
  }
  if (!std::isfinite(m.density) || m.density <= 0.0) {
    out.push_back("rho=" + fmt(m.density) + " must be > 0");
  }
  if (m.yield_stress) {
    if (!std::isfinite(*m.yield_stress) || *m.yield_stress <= 0.0) {
      out.push_back("sigma_y=" + fmt(*m.yield_stress) + " must be > 0");
    }
  } else if (requires_yield_stress(m.behavior)) {
    out.push_back("sigma_y required for " + std::string(to_string(m.behavior)));
  }
  if (m.friction_angle) {
    const double phi = *m.friction_angle;
    if (!std::isfinite(phi) || phi < kMinFrictionAngle || phi > kMaxFrictionAngle) {
      out.push_back("phi=" + fmt(phi) + " outside [0, pi/2]");
    }
  } else if (requires_friction_angle(m.behavior)) {
    out.push_back("phi required for " + std::string(to_string(m.behavior)));
  }
  if (!behavior_from_index(static_cast<std::int64_t>(m.behavior))) {
    out.push_back("behavior index out of range");
  }
  return out;
}

void validate_material(const MaterialParams& m) {
  auto failures = check_material(m);
  if (!failures.empty()) throw ValidationError(std::move(failures));
}

MaterialFeatures material_feature_vector(const MaterialParams& m) {
  MaterialFeatures f{};
  f[0] = std::log10(m.youngs_modulus);
  f[1] = m.poisson_ratio;
  f[2] = requires_yield_stress(m.behavior) ? std::log10(m.yield_stress.value()) : 0.0;
  f[3] = requires_friction_angle(m.behavior) ? m.friction_angle.value() : 0.0;
  f[4] = m.density;
  f[5 + static_cast<int>(m.behavior)] = 1.0;
  return f;
}

MaterialParams material_from_features(const MaterialFeatures& f) {
  int hot = -1;
  for (int i = 0; i < 4; ++i) {
    if (f[5 + i] == 1.0) {
      if (hot >= 0) throw ParseError("behavior", "one-hot has several set slots");
      hot = i;
    } else if (f[5 + i] != 0.0) {
      throw ParseError("behavior", "one-hot slot is neither 0 nor 1");
    }
  }
  if (hot < 0) throw ParseError("behavior", "one-hot has no set slot");

  MaterialParams m;
  m.behavior = static_cast<BehaviorType>(hot);
  m.youngs_modulus = std::pow(10.0, f[0]);
  m.poisson_ratio = f[1];
  if (requires_yield_stress(m.behavior)) m.yield_stress = std::pow(10.0, f[2]);
  if (requires_friction_angle(m.behavior)) m.friction_angle = f[3];
  m.density = f[4];
  return m;
}

}  // namespace simready::assets
