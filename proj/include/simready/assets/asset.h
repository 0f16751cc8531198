#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "simready/assets/material.h"

namespace simready::assets {

struct PartInfo {
  std::string name;
  std::string coarse_material;
  std::string fine_material;  // empty when not assigned

  friend bool operator==(const PartInfo&, const PartInfo&) = default;
};

// Forward map from world coordinates to the normalized unit box:
//   normalized = scale * world + translation
struct NormalizationTransform {
  double scale = 1.0;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  Eigen::Vector3d apply(const Eigen::Vector3d& world) const {
    return scale * world + translation;
  }
  Eigen::Vector3d invert(const Eigen::Vector3d& normalized) const {
    return (normalized - translation) / scale;
  }
  friend bool operator==(const NormalizationTransform&,
                         const NormalizationTransform&) = default;
};

struct AssetMetadata {
  std::string asset_id;
  std::string category;
  std::vector<PartInfo> parts;
  // Meters per normalized unit when the asset is simulated.
  double world_scale = 1.0;

  friend bool operator==(const AssetMetadata&, const AssetMetadata&) = default;
};

// A point-sampled object where every point carries geometry, albedo and the
// full physical parameter bundle. part_labels index into metadata.parts.
struct SimReadyAsset {
  std::vector<Eigen::Vector3d> points;
  std::vector<Eigen::Vector3d> colors;
  std::vector<std::int32_t> part_labels;
  std::vector<MaterialParams> materials;
  AssetMetadata metadata;
  NormalizationTransform transform;

  std::size_t size() const { return points.size(); }
  friend bool operator==(const SimReadyAsset&, const SimReadyAsset&) = default;
};

std::vector<std::string> check_asset(const SimReadyAsset& asset);
void validate_asset(const SimReadyAsset& asset);

// Uniformly scales and translates so the longest axis spans exactly [0, 1]
// and the other axes are centered at 0.5. Throws on zero extent.
std::pair<std::vector<Eigen::Vector3d>, NormalizationTransform>
normalize_to_unit_box(std::span<const Eigen::Vector3d> points);

inline constexpr std::size_t kDefaultPropagationNeighbors = 5;

// Majority vote over the k nearest labeled points. Ties go to the tied label
// whose representative is nearest (distance, then index).
std::vector<std::int32_t> propagate_materials(
    std::span<const Eigen::Vector3d> labeled_points,
    std::span<const std::int32_t> labels,
    std::span<const Eigen::Vector3d> queries,
    std::size_t k = kDefaultPropagationNeighbors);

// Each query inherits the color of its nearest surface point.
std::vector<Eigen::Vector3d> propagate_colors(
    std::span<const Eigen::Vector3d> surface_points,
    std::span<const Eigen::Vector3d> surface_colors,
    std::span<const Eigen::Vector3d> queries);

}  // namespace simready::assets
