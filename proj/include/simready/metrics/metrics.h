#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "simready/assets/material.h"
#include "simready/mpm/simulation.h"

namespace simready::metrics {

using Eigen::Vector3d;

// 0.5 * (mean_a min_b |a-b|^2 + mean_b min_a |a-b|^2).
double chamfer_distance(std::span<const Vector3d> a, std::span<const Vector3d> b);

// Mean chamfer distance over synchronized frames. Frame counts must match
// and time stamps agree within 1e-9 s.
double sim_cd(const mpm::Trajectory& pred, const mpm::Trajectory& truth);

inline constexpr double kDefaultFScoreThreshold = 0.02;

// Precision: fraction of pred within tau of truth; recall the converse.
// F = 2PR / (P + R), and 0 when both are 0.
double f_score(std::span<const Vector3d> pred, std::span<const Vector3d> truth,
               double tau = kDefaultFScoreThreshold);

class VoxelGrid {
 public:
  explicit VoxelGrid(int resolution);
  int resolution() const { return resolution_; }
  bool at(int i, int j, int k) const { return cells_[index(i, j, k)] != 0; }
  void set(int i, int j, int k, bool v = true) { cells_[index(i, j, k)] = v ? 1 : 0; }
  std::size_t count() const;
  const std::vector<std::uint8_t>& cells() const { return cells_; }

 private:
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * resolution_ + j) * resolution_ + k;
  }
  int resolution_;
  std::vector<std::uint8_t> cells_;
};

inline constexpr int kDefaultIouResolution = 64;

// A voxel of [0,1]^3 is occupied when it contains a point. Points outside the
// box are clamped to the boundary voxels.
VoxelGrid voxelize(std::span<const Vector3d> points, int resolution = kDefaultIouResolution);

// |A and B| / |A or B|; 1 when both are empty.
double occupancy_iou(const VoxelGrid& a, const VoxelGrid& b);

struct MaterialMetrics {
  double behavior_accuracy = 0.0;
  double mae_log_e = 0.0;
  double mae_nu = 0.0;
  double mae_log_sigma = 0.0;  // feature slot, 0 for behaviors without yield stress
  double mae_phi = 0.0;        // feature slot, 0 for behaviors without friction angle
  double mae_rho = 0.0;        // kg/m^3
  std::optional<double> mae_color;
};

// Point-wise comparison; colors are optional but must come as a pair.
MaterialMetrics material_report(std::span<const assets::MaterialParams> pred,
                                std::span<const assets::MaterialParams> truth,
                                std::span<const Vector3d> pred_colors = {},
                                std::span<const Vector3d> truth_colors = {});

using SceneScores = std::map<std::string, double>;  // method -> score

// Per-scene z-scores with the population standard deviation; a scene whose
// scores are all equal maps to zeros. Throws for scenes with < 2 methods.
std::map<std::string, SceneScores> zscore_calibrate(
    const std::map<std::string, SceneScores>& scores);

// Named metric values in the evaluation table's row order. Values are stored
// unscaled (no percent or power-of-ten presentation factors).
class MetricsReport {
 public:
  static const std::vector<std::string>& known_names();

  void set(const std::string& name, double value);
  std::optional<double> get(const std::string& name) const;
  bool empty() const { return values_.empty(); }

  void add_material(const MaterialMetrics& m);

  // "name: value" lines in table order.
  std::string to_text() const;
  nlohmann::json to_json() const;

 private:
  std::map<std::string, double> values_;
};

}  // namespace simready::metrics
