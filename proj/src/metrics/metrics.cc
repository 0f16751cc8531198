#include "simready/metrics/metrics.h"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "simready/common/error.h"
#include "simready/common/kdtree.h"

namespace simready::metrics {
namespace {

// Mean over `from` of the squared distance to the nearest point of `to`.
double mean_nearest_squared(std::span<const Vector3d> from, std::span<const Vector3d> to) {
  const KdTree tree(to);
  double sum = 0.0;
  for (const auto& p : from) sum += tree.nearest(p).dist2;
  return sum / static_cast<double>(from.size());
}

double fraction_within(std::span<const Vector3d> from, std::span<const Vector3d> to, double tau) {
  const KdTree tree(to);
  const double tau2 = tau * tau;
  std::size_t hits = 0;
  for (const auto& p : from) hits += tree.nearest(p).dist2 <= tau2 ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(from.size());
}

void require_nonempty(std::span<const Vector3d> a, std::span<const Vector3d> b, const char* what) {
  if (a.empty() || b.empty()) throw Error(std::string(what) + " needs two nonempty point sets");
}

}  // namespace

double chamfer_distance(std::span<const Vector3d> a, std::span<const Vector3d> b) {
  require_nonempty(a, b, "chamfer distance");
  return 0.5 * (mean_nearest_squared(a, b) + mean_nearest_squared(b, a));
}

double sim_cd(const mpm::Trajectory& pred, const mpm::Trajectory& truth) {
  if (pred.frames.size() != truth.frames.size()) {
    throw Error("trajectories differ in frame count (" + std::to_string(pred.frames.size()) +
                " vs " + std::to_string(truth.frames.size()) + ")");
  }
  if (pred.frames.empty()) throw Error("trajectories have no frames");
  double sum = 0.0;
  for (std::size_t k = 0; k < pred.frames.size(); ++k) {
    if (std::abs(pred.frames[k].time - truth.frames[k].time) > 1e-9) {
      throw Error("frame " + std::to_string(k) + " time stamps differ");
    }
    sum += chamfer_distance(pred.frames[k].positions, truth.frames[k].positions);
  }
  return sum / static_cast<double>(pred.frames.size());
}

double f_score(std::span<const Vector3d> pred, std::span<const Vector3d> truth, double tau) {
  require_nonempty(pred, truth, "f-score");
  if (!(tau > 0.0)) throw Error("f-score threshold must be positive");
  const double precision = fraction_within(pred, truth, tau);
  const double recall = fraction_within(truth, pred, tau);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

VoxelGrid::VoxelGrid(int resolution) : resolution_(resolution) {
  if (resolution < 1) throw Error("voxel resolution must be >= 1");
  cells_.assign(static_cast<std::size_t>(resolution) * resolution * resolution, 0);
}

std::size_t VoxelGrid::count() const {
  return static_cast<std::size_t>(std::count(cells_.begin(), cells_.end(), 1));
}

VoxelGrid voxelize(std::span<const Vector3d> points, int resolution) {
  VoxelGrid grid(resolution);
  auto cell = [&](double c) {
    const double scaled = std::floor(c * resolution);
    return static_cast<int>(std::clamp(scaled, 0.0, static_cast<double>(resolution - 1)));
  };
  for (const auto& p : points) grid.set(cell(p.x()), cell(p.y()), cell(p.z()));
  return grid;
}

double occupancy_iou(const VoxelGrid& a, const VoxelGrid& b) {
  if (a.resolution() != b.resolution()) {
    throw Error("voxel grids differ in resolution (" + std::to_string(a.resolution()) + " vs " +
                std::to_string(b.resolution()) + ")");
  }
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.cells().size(); ++i) {
    inter += a.cells()[i] & b.cells()[i];
    uni += a.cells()[i] | b.cells()[i];
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

MaterialMetrics material_report(std::span<const assets::MaterialParams> pred,
                                std::span<const assets::MaterialParams> truth,
                                std::span<const Vector3d> pred_colors,
                                std::span<const Vector3d> truth_colors) {
  if (pred.size() != truth.size()) {
    throw Error("material sets differ in length (" + std::to_string(pred.size()) + " vs " +
                std::to_string(truth.size()) + ")");
  }
  if (pred.empty()) throw Error("material comparison needs at least one point");
  if (pred_colors.size() != truth_colors.size() ||
      (!pred_colors.empty() && pred_colors.size() != pred.size())) {
    throw Error("color sets must both be absent or match the point count");
  }
  MaterialMetrics out;
  const double n = static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const auto p = assets::material_feature_vector(pred[i]);
    const auto t = assets::material_feature_vector(truth[i]);
    out.behavior_accuracy += pred[i].behavior == truth[i].behavior ? 1.0 : 0.0;
    out.mae_log_e += std::abs(p[0] - t[0]);
    out.mae_nu += std::abs(p[1] - t[1]);
    out.mae_log_sigma += std::abs(p[2] - t[2]);
    out.mae_phi += std::abs(p[3] - t[3]);
    out.mae_rho += std::abs(p[4] - t[4]);
  }
  out.behavior_accuracy /= n;
  out.mae_log_e /= n;
  out.mae_nu /= n;
  out.mae_log_sigma /= n;
  out.mae_phi /= n;
  out.mae_rho /= n;
  if (!pred_colors.empty()) {
    double sum = 0.0;
    for (std::size_t i = 0; i < pred_colors.size(); ++i) {
      sum += (pred_colors[i] - truth_colors[i]).cwiseAbs().sum();
    }
    out.mae_color = sum / (3.0 * n);
  }
  return out;
}

std::map<std::string, SceneScores> zscore_calibrate(
    const std::map<std::string, SceneScores>& scores) {
  std::map<std::string, SceneScores> out;
  for (const auto& [scene, methods] : scores) {
    if (methods.size() < 2) {
      throw Error("scene '" + scene + "' needs at least 2 methods for z-score calibration");
    }
    const double n = static_cast<double>(methods.size());
    double mean = 0.0;
    for (const auto& [_, s] : methods) mean += s;
    mean /= n;
    double var = 0.0;
    for (const auto& [_, s] : methods) var += (s - mean) * (s - mean);
    const double stddev = std::sqrt(var / n);
    SceneScores& z = out[scene];
    for (const auto& [method, s] : methods) z[method] = stddev > 0.0 ? (s - mean) / stddev : 0.0;
  }
  return out;
}

const std::vector<std::string>& MetricsReport::known_names() {
  static const std::vector<std::string> names = {
      "M.B. Acc", "MAE-log(E)", "MAE-nu", "MAE-log(sigma)", "MAE-phi", "MAE-rho",
      "Sim-CD",   "MAE-c",      "IoU",    "CD",             "F-Score"};
  return names;
}

void MetricsReport::set(const std::string& name, double value) {
  const auto& names = known_names();
  if (std::find(names.begin(), names.end(), name) == names.end()) {
    throw Error("unknown metric '" + name + "'");
  }
  values_[name] = value;
}

std::optional<double> MetricsReport::get(const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

void MetricsReport::add_material(const MaterialMetrics& m) {
  set("M.B. Acc", m.behavior_accuracy);
  set("MAE-log(E)", m.mae_log_e);
  set("MAE-nu", m.mae_nu);
  set("MAE-log(sigma)", m.mae_log_sigma);
  set("MAE-phi", m.mae_phi);
  set("MAE-rho", m.mae_rho);
  if (m.mae_color) set("MAE-c", *m.mae_color);
}

std::string MetricsReport::to_text() const {
  std::string out;
  for (const auto& name : known_names()) {
    auto it = values_.find(name);
    if (it == values_.end()) continue;
    char buf[32];
    auto r = std::to_chars(buf, buf + sizeof(buf), it->second);
    out += name + ": " + std::string(buf, r.ptr) + "\n";
  }
  return out;
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json metrics = nlohmann::json::object();
  for (const auto& [name, value] : values_) metrics[name] = value;
  return metrics;
}

}  // namespace simready::metrics
