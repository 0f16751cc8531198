#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "simready/assets/material.h"
#include "simready/common/error.h"

namespace simready::assets {
namespace {

MaterialParams make(double E, double nu, std::optional<double> sy, std::optional<double> phi,
                    double rho, BehaviorType b) {
  MaterialParams m;
  m.youngs_modulus = E;
  m.poisson_ratio = nu;
  m.yield_stress = sy;
  m.friction_angle = phi;
  m.density = rho;
  m.behavior = b;
  return m;
}

TEST(Behavior, FourVariantsWithFixedModelPairs) {
  EXPECT_EQ(kAllBehaviors.size(), 4u);
  EXPECT_EQ(models_for(BehaviorType::kM0).elastic, ElasticModel::kNeoHookean);
  EXPECT_EQ(models_for(BehaviorType::kM0).plastic, PlasticModel::kIdentity);
  EXPECT_EQ(models_for(BehaviorType::kM1).plastic, PlasticModel::kVonMisesWithDamage);
  EXPECT_EQ(models_for(BehaviorType::kM2).plastic, PlasticModel::kVonMises);
  EXPECT_EQ(models_for(BehaviorType::kM3).elastic, ElasticModel::kStVK);
  EXPECT_EQ(models_for(BehaviorType::kM3).plastic, PlasticModel::kDruckerPrager);
}

TEST(Behavior, StringRoundTrip) {
  for (auto b : kAllBehaviors) EXPECT_EQ(behavior_from_string(to_string(b)), b);
  EXPECT_THROW(behavior_from_string("M4"), ParseError);
  EXPECT_FALSE(behavior_from_index(4).has_value());
  EXPECT_EQ(behavior_from_index(2), BehaviorType::kM2);
}

TEST(MaterialValidation, RangesAreEnforced) {
  EXPECT_TRUE(check_material(make(1e6, 0.3, std::nullopt, std::nullopt, 500, BehaviorType::kM0)).empty());
  // E span is 1e-3 GPa .. 1e3 GPa.
  EXPECT_TRUE(check_material(make(1e6, 0.3, {}, {}, 500, BehaviorType::kM0)).empty());
  EXPECT_TRUE(check_material(make(1e12, 0.3, {}, {}, 500, BehaviorType::kM0)).empty());
  EXPECT_FALSE(check_material(make(1e3, 0.3, {}, {}, 500, BehaviorType::kM0)).empty());
  EXPECT_FALSE(check_material(make(1e14, 0.3, {}, {}, 500, BehaviorType::kM0)).empty());
  EXPECT_FALSE(check_material(make(1e6, 0.7, {}, {}, 500, BehaviorType::kM0)).empty());
  EXPECT_FALSE(check_material(make(1e6, 0.5, {}, {}, 500, BehaviorType::kM0)).empty());
  EXPECT_TRUE(check_material(make(1e6, 0.499, {}, {}, 500, BehaviorType::kM0)).empty());
  EXPECT_FALSE(check_material(make(1e6, 0.3, {}, {}, 0, BehaviorType::kM0)).empty());
  EXPECT_FALSE(check_material(make(1e6, 0.3, {}, {}, 500, BehaviorType::kM1)).empty());
  EXPECT_FALSE(check_material(make(1e6, 0.3, -1.0, {}, 500, BehaviorType::kM2)).empty());
  EXPECT_TRUE(check_material(make(1e6, 0.3, 1e4, {}, 500, BehaviorType::kM2)).empty());
  EXPECT_FALSE(check_material(make(1e6, 0.3, {}, {}, 500, BehaviorType::kM3)).empty());
  EXPECT_TRUE(check_material(make(1e6, 0.3, {}, 0.0, 500, BehaviorType::kM3)).empty());
  EXPECT_TRUE(check_material(make(1e6, 0.3, {}, std::numbers::pi / 2, 500, BehaviorType::kM3)).empty());
  EXPECT_FALSE(check_material(make(1e6, 0.3, {}, 1.6, 500, BehaviorType::kM3)).empty());
  EXPECT_FALSE(check_material(make(1e6, 0.3, {}, -0.1, 500, BehaviorType::kM3)).empty());
}

TEST(MaterialValidation, ListsEveryFailure) {
  try {
    validate_material(make(1.0, 0.7, {}, {}, -1, BehaviorType::kM1));
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.failures().size(), 4u);
  }
}

TEST(FeatureVector, DirectEncoding) {
  const auto f = material_feature_vector(make(1e6, 0.25, 1e4, 0.0, 500, BehaviorType::kM1));
  const MaterialFeatures want = {6, 0.25, 4, 0, 500, 0, 1, 0, 0};
  ASSERT_EQ(f.size(), 9u);
  for (std::size_t i = 0; i < f.size(); ++i) EXPECT_DOUBLE_EQ(f[i], want[i]) << i;
}

TEST(FeatureVector, SentinelsForUnusedSlots) {
  const auto f = material_feature_vector(make(1e7, 0.3, {}, {}, 800, BehaviorType::kM0));
  EXPECT_EQ(f[2], 0.0);
  EXPECT_EQ(f[3], 0.0);
  EXPECT_EQ(f[5], 1.0);
  EXPECT_EQ(f[6] + f[7] + f[8], 0.0);
  EXPECT_EQ(kFeatureArity, 9u);
}

TEST(FeatureVector, DecodeReencodeRoundTrip) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> logE(4.0, 13.0), nu(0.0, 0.499), logs(2.0, 9.0),
      phi(0.0, std::numbers::pi / 2), rho(10.0, 20000.0);
  for (int i = 0; i < 1000; ++i) {
    const auto b = kAllBehaviors[rng() % 4];
    const auto m = make(std::pow(10.0, logE(rng)), nu(rng),
                        requires_yield_stress(b) ? std::optional(std::pow(10.0, logs(rng)))
                                                 : std::nullopt,
                        requires_friction_angle(b) ? std::optional(phi(rng)) : std::nullopt,
                        rho(rng), b);
    const auto f = material_feature_vector(m);
    const auto decoded = material_from_features(f);
    EXPECT_EQ(decoded.behavior, b);
    EXPECT_EQ(decoded.yield_stress.has_value(), requires_yield_stress(b));
    EXPECT_EQ(decoded.friction_angle.has_value(), requires_friction_angle(b));
    const auto again = material_feature_vector(decoded);
    for (std::size_t k = 0; k < f.size(); ++k) {
      EXPECT_NEAR(again[k], f[k], 1e-12 * std::max(1.0, std::abs(f[k])));
    }
  }
}

TEST(FeatureVector, MalformedOneHotRejected) {
  MaterialFeatures f = {6, 0.3, 0, 0, 500, 1, 1, 0, 0};
  EXPECT_THROW(material_from_features(f), ParseError);
  f = {6, 0.3, 0, 0, 500, 0, 0, 0, 0};
  EXPECT_THROW(material_from_features(f), ParseError);
}

}  // namespace
}  // namespace simready::assets
