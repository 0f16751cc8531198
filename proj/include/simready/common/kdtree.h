#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace simready {

// Static 3D k-d tree over a borrowed point array. Neighbor order is
// (squared distance, index) so results are fully deterministic under ties.
class KdTree {
 public:
  struct Neighbor {
    double dist2;
    std::size_t index;
    friend bool operator<(const Neighbor& a, const Neighbor& b) {
      return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
    }
  };

  // The tree keeps a view of `points`; the caller keeps them alive.
  explicit KdTree(std::span<const Eigen::Vector3d> points);

  std::size_t size() const { return points_.size(); }

  // The min(k, size()) nearest points, ascending.
  std::vector<Neighbor> knn(const Eigen::Vector3d& query, std::size_t k) const;

  Neighbor nearest(const Eigen::Vector3d& query) const;

 private:
  struct Node {
    // Leaf when axis < 0: covers order_[begin, end).
    int axis = -1;
    double split = 0.0;
    std::size_t begin = 0;
    std::size_t end = 0;
    int left = -1;
    int right = -1;
  };

  int build(std::size_t begin, std::size_t end);
  void search(int node, const Eigen::Vector3d& query, std::size_t k,
              std::vector<Neighbor>& heap) const;

  std::span<const Eigen::Vector3d> points_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace simready
