#include "simready/assets/asset.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "simready/common/error.h"
#include "simready/common/kdtree.h"

namespace simready::assets {

std::vector<std::string> check_asset(const SimReadyAsset& asset) {
  std::vector<std::string> out;
  const std::size_t n = asset.points.size();
  if (n == 0) out.push_back("asset has no points");
  if (asset.colors.size() != n) out.push_back("colors length differs from points");
  if (asset.part_labels.size() != n) out.push_back("part_labels length differs from points");
  if (asset.materials.size() != n) out.push_back("materials length differs from points");
  if (!(asset.metadata.world_scale > 0.0) || !std::isfinite(asset.metadata.world_scale)) {
    out.push_back("world_scale must be positive");
  }
  if (!(asset.transform.scale > 0.0) || !std::isfinite(asset.transform.scale)) {
    out.push_back("normalization scale must be positive");
  }

  std::size_t outside = 0, bad_color = 0, bad_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = asset.points[i];
    if (!p.allFinite() || (p.array() < 0.0).any() || (p.array() > 1.0).any()) ++outside;
    if (i < asset.colors.size()) {
      const auto& c = asset.colors[i];
      if (!c.allFinite() || (c.array() < 0.0).any() || (c.array() > 1.0).any()) ++bad_color;
    }
    if (i < asset.part_labels.size()) {
      const auto l = asset.part_labels[i];
      if (l < 0 || static_cast<std::size_t>(l) >= asset.metadata.parts.size()) ++bad_label;
    }
  }
  if (outside) out.push_back(std::to_string(outside) + " points outside the unit box");
  if (bad_color) out.push_back(std::to_string(bad_color) + " colors outside [0,1]");
  if (bad_label) out.push_back(std::to_string(bad_label) + " part labels not in the part list");

  // Report each distinct material failure once with its first point index.
  std::map<std::string, std::size_t> material_failures;
  for (std::size_t i = 0; i < asset.materials.size(); ++i) {
    for (auto& f : check_material(asset.materials[i])) material_failures.emplace(std::move(f), i);
  }
  for (const auto& [msg, i] : material_failures) {
    out.push_back("material at point " + std::to_string(i) + ": " + msg);
  }
  return out;
}

void validate_asset(const SimReadyAsset& asset) {
  auto failures = check_asset(asset);
  if (!failures.empty()) throw ValidationError(std::move(failures));
}

std::pair<std::vector<Eigen::Vector3d>, NormalizationTransform>
normalize_to_unit_box(std::span<const Eigen::Vector3d> points) {
  if (points.empty()) throw Error("cannot normalize an empty point set");
  Eigen::Vector3d lo = points.front(), hi = points.front();
  for (const auto& p : points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double extent = (hi - lo).maxCoeff();
  if (!(extent > 0.0) || !std::isfinite(extent)) {
    throw Error("degenerate extent: all points coincide");
  }
  NormalizationTransform t;
  t.scale = 1.0 / extent;
  t.translation = Eigen::Vector3d::Constant(0.5) - t.scale * 0.5 * (lo + hi);

  std::vector<Eigen::Vector3d> out;
  out.reserve(points.size());
  for (const auto& p : points) {
    // Rounding can leave a coordinate a few ulps outside the box.
    out.push_back(t.apply(p).cwiseMax(0.0).cwiseMin(1.0));
  }
  return {std::move(out), t};
}

std::vector<std::int32_t> propagate_materials(
    std::span<const Eigen::Vector3d> labeled_points,
    std::span<const std::int32_t> labels,
    std::span<const Eigen::Vector3d> queries, std::size_t k) {
  if (labeled_points.empty()) throw Error("label propagation needs labeled points");
  if (labels.size() != labeled_points.size()) {
    throw Error("labels and labeled points differ in length");
  }
  if (k == 0) throw Error("neighbor count must be >= 1");

  const KdTree tree(labeled_points);
  std::vector<std::int32_t> out(queries.size());
  std::vector<std::pair<std::int32_t, int>> votes;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const auto neighbors = tree.knn(queries[q], k);
    // Neighbors arrive nearest first, so insertion order into `votes`
    // already ranks labels by their nearest representative.
    votes.clear();
    for (const auto& nb : neighbors) {
      const std::int32_t label = labels[nb.index];
      auto it = std::find_if(votes.begin(), votes.end(),
                             [&](const auto& v) { return v.first == label; });
      if (it == votes.end()) {
        votes.emplace_back(label, 1);
      } else {
        ++it->second;
      }
    }
    auto best = votes.begin();
    for (auto it = votes.begin(); it != votes.end(); ++it) {
      if (it->second > best->second) best = it;
    }
    out[q] = best->first;
  }
  return out;
}

std::vector<Eigen::Vector3d> propagate_colors(
    std::span<const Eigen::Vector3d> surface_points,
    std::span<const Eigen::Vector3d> surface_colors,
    std::span<const Eigen::Vector3d> queries) {
  if (surface_points.empty()) throw Error("color propagation needs surface points");
  if (surface_colors.size() != surface_points.size()) {
    throw Error("surface colors and points differ in length");
  }
  const KdTree tree(surface_points);
  std::vector<Eigen::Vector3d> out;
  out.reserve(queries.size());
  for (const auto& q : queries) out.push_back(surface_colors[tree.nearest(q).index]);
  return out;
}

}  // namespace simready::assets
