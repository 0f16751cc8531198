#include "simready/common/kdtree.h"

#include <algorithm>

#include "simready/common/error.h"

namespace simready {
namespace {
constexpr std::size_t kLeafSize = 8;
}  // namespace

KdTree::KdTree(std::span<const Eigen::Vector3d> points) : points_(points) {
  if (points_.empty()) throw Error("k-d tree requires at least one point");
  order_.resize(points_.size());
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
  nodes_.reserve(2 * points_.size() / kLeafSize + 1);
  build(0, order_.size());
}

int KdTree::build(std::size_t begin, std::size_t end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back(Node{-1, 0.0, begin, end, -1, -1});
  if (end - begin <= kLeafSize) return id;

  Eigen::Vector3d lo = points_[order_[begin]];
  Eigen::Vector3d hi = lo;
  for (std::size_t i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(points_[order_[i]]);
    hi = hi.cwiseMax(points_[order_[i]]);
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  if (hi[axis] == lo[axis]) return id;  // all coincident: keep as a leaf

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid,
                   order_.begin() + end, [&](std::size_t a, std::size_t b) {
                     return points_[a][axis] < points_[b][axis];
                   });
  const double split = points_[order_[mid]][axis];
  const int left = build(begin, mid);
  const int right = build(mid, end);
  Node& node = nodes_[id];
  node.axis = axis;
  node.split = split;
  node.left = left;
  node.right = right;
  return id;
}

void KdTree::search(int node_id, const Eigen::Vector3d& query, std::size_t k,
                    std::vector<Neighbor>& heap) const {
  const Node& node = nodes_[node_id];
  if (node.axis < 0) {
    for (std::size_t i = node.begin; i < node.end; ++i) {
      const std::size_t idx = order_[i];
      const Neighbor cand{(query - points_[idx]).squaredNorm(), idx};
      if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end());
      } else if (cand < heap.front()) {
        std::pop_heap(heap.begin(), heap.end());
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end());
      }
    }
    return;
  }
  // Left holds coordinates <= split, right holds >= split.
  const double diff = query[node.axis] - node.split;
  const int near = diff <= 0.0 ? node.left : node.right;
  const int far = diff <= 0.0 ? node.right : node.left;
  search(near, query, k, heap);
  // Equal distances must still be visited: a tie may carry a smaller index.
  if (heap.size() < k || diff * diff <= heap.front().dist2) {
    search(far, query, k, heap);
  }
}

std::vector<KdTree::Neighbor> KdTree::knn(const Eigen::Vector3d& query,
                                          std::size_t k) const {
  std::vector<Neighbor> heap;
  if (k == 0) return heap;
  heap.reserve(k);
  search(0, query, k, heap);
  std::sort_heap(heap.begin(), heap.end());
  return heap;
}

KdTree::Neighbor KdTree::nearest(const Eigen::Vector3d& query) const {
  return knn(query, 1).front();
}

}  // namespace simready
