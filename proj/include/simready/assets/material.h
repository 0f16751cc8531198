#pragma once

#include <array>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace simready::assets {

// Material behavior type. Each maps to one fixed elasticity/plasticity pair.
enum class BehaviorType : std::int32_t {
  kM0 = 0,  // neo-Hookean + identity plasticity (pure elastic)
  kM1 = 1,  // neo-Hookean + von Mises with damage (softening)
  kM2 = 2,  // neo-Hookean + von Mises
  kM3 = 3,  // StVK + Drucker-Prager (granular)
};

inline constexpr std::array<BehaviorType, 4> kAllBehaviors = {
    BehaviorType::kM0, BehaviorType::kM1, BehaviorType::kM2, BehaviorType::kM3};

enum class ElasticModel { kNeoHookean, kStVK };
enum class PlasticModel { kIdentity, kVonMisesWithDamage, kVonMises, kDruckerPrager };

struct ModelPair {
  ElasticModel elastic;
  PlasticModel plastic;
};

constexpr ModelPair models_for(BehaviorType b) {
  switch (b) {
    case BehaviorType::kM0: return {ElasticModel::kNeoHookean, PlasticModel::kIdentity};
    case BehaviorType::kM1: return {ElasticModel::kNeoHookean, PlasticModel::kVonMisesWithDamage};
    case BehaviorType::kM2: return {ElasticModel::kNeoHookean, PlasticModel::kVonMises};
    case BehaviorType::kM3: return {ElasticModel::kStVK, PlasticModel::kDruckerPrager};
  }
  return {ElasticModel::kNeoHookean, PlasticModel::kIdentity};
}

constexpr bool requires_yield_stress(BehaviorType b) {
  return b == BehaviorType::kM1 || b == BehaviorType::kM2;
}
constexpr bool requires_friction_angle(BehaviorType b) {
  return b == BehaviorType::kM3;
}

std::string_view to_string(BehaviorType b);
// Accepts "M0".."M3"; throws ParseError otherwise.
BehaviorType behavior_from_string(std::string_view s);
std::optional<BehaviorType> behavior_from_index(std::int64_t i);

// Admissible parameter ranges (SI units).
inline constexpr double kMinYoungsModulus = 1e4;   // Pa
inline constexpr double kMaxYoungsModulus = 1e13;  // Pa
inline constexpr double kMinPoissonRatio = 0.0;
inline constexpr double kMaxPoissonRatio = 0.499;
inline constexpr double kMinFrictionAngle = 0.0;
inline constexpr double kMaxFrictionAngle = std::numbers::pi / 2;  // rad

// Per-point physical parameters in linear SI form.
struct MaterialParams {
  double youngs_modulus = 1e6;           // E, Pa
  double poisson_ratio = 0.3;            // nu
  std::optional<double> yield_stress;    // sigma_y, Pa; required for M1/M2
  std::optional<double> friction_angle;  // phi, rad; required for M3
  double density = 1000.0;               // rho, kg/m^3
  BehaviorType behavior = BehaviorType::kM0;

  friend bool operator==(const MaterialParams&, const MaterialParams&) = default;
};

// Human-readable description of every violated invariant; empty when valid.
std::vector<std::string> check_material(const MaterialParams& m);
// Throws ValidationError listing all failures.
void validate_material(const MaterialParams& m);

// [log10 E, nu, log10 sigma_y, phi, rho, onehot(M0..M3)]
inline constexpr std::size_t kFeatureArity = 9;
using MaterialFeatures = std::array<double, kFeatureArity>;

// Slots for parameters the behavior does not use carry fixed sentinels:
// log10(1 Pa) = 0 for sigma_y and 0 rad for phi.
MaterialFeatures material_feature_vector(const MaterialParams& m);

// Inverse of material_feature_vector up to the sentinel rule: sentinel slots
// of behaviors that do not use them decode to an unset parameter.
MaterialParams material_from_features(const MaterialFeatures& f);

}  // namespace simready::assets
