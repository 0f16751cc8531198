#include <algorithm>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "simready/common/binary_io.h"
#include "simready/common/error.h"
#include "simready/common/kdtree.h"
#include "simready/common/parallel.h"

namespace simready {
namespace {

std::vector<KdTree::Neighbor> brute_knn(const std::vector<Eigen::Vector3d>& pts,
                                        const Eigen::Vector3d& q, std::size_t k) {
  std::vector<KdTree::Neighbor> all;
  for (std::size_t i = 0; i < pts.size(); ++i) all.push_back({(pts[i] - q).squaredNorm(), i});
  std::sort(all.begin(), all.end());
  all.resize(std::min(k, all.size()));
  return all;
}

TEST(KdTree, MatchesBruteForceOnRandomClouds) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng() % 600;
    std::vector<Eigen::Vector3d> pts(n);
    for (auto& p : pts) p = {u(rng), u(rng), u(rng)};
    const KdTree tree(pts);
    for (int q = 0; q < 50; ++q) {
      const Eigen::Vector3d query(u(rng), u(rng), u(rng));
      const std::size_t k = 1 + rng() % 12;
      const auto got = tree.knn(query, k);
      const auto want = brute_knn(pts, query, k);
      ASSERT_EQ(got.size(), want.size());
      for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_EQ(got[i].index, want[i].index);
        EXPECT_EQ(got[i].dist2, want[i].dist2);
      }
    }
  }
}

TEST(KdTree, TiesResolveByIndexOnALattice) {
  // Integer lattice: many exactly equal distances.
  std::vector<Eigen::Vector3d> pts;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      for (int k = 0; k < 6; ++k) pts.emplace_back(i, j, k);
  const KdTree tree(pts);
  for (const Eigen::Vector3d q : {Eigen::Vector3d(2.5, 2.5, 2.5), Eigen::Vector3d(0, 0, 0),
                                  Eigen::Vector3d(3, 2.5, 1)}) {
    const auto got = tree.knn(q, 10);
    const auto want = brute_knn(pts, q, 10);
    for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i].index, want[i].index);
  }
}

TEST(KdTree, DuplicatePointsAndLargeK) {
  std::vector<Eigen::Vector3d> pts(20, Eigen::Vector3d(0.5, 0.5, 0.5));
  const KdTree tree(pts);
  const auto got = tree.knn(Eigen::Vector3d::Zero(), 100);
  ASSERT_EQ(got.size(), 20u);
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_EQ(got[i].index, i);
  EXPECT_EQ(tree.nearest(Eigen::Vector3d::Zero()).index, 0u);
}

TEST(KdTree, EmptyInputThrows) {
  std::vector<Eigen::Vector3d> none;
  EXPECT_THROW(KdTree{none}, Error);
}

TEST(Fnv1a, KnownVectors) {
  io::Fnv1a empty;
  EXPECT_EQ(empty.digest(), 0xcbf29ce484222325ULL);
  io::Fnv1a a;
  a.update("a");
  EXPECT_EQ(a.digest(), 0xaf63dc4c8601ec8cULL);
  io::Fnv1a foobar;
  foobar.update("foobar");
  EXPECT_EQ(foobar.digest(), 0x85944171f73967e8ULL);
  EXPECT_EQ(io::to_hex(0xaf63dc4c8601ec8cULL), "af63dc4c8601ec8c");
  EXPECT_EQ(io::to_hex(1), "0000000000000001");
}

TEST(BinaryIo, LittleEndianRoundTrip) {
  std::stringstream ss;
  io::write_le<std::int32_t>(ss, 0x01020304);
  io::write_le<float>(ss, 1.5f);
  const std::string bytes = ss.str();
  ASSERT_EQ(bytes.size(), 8u);
  EXPECT_EQ(static_cast<unsigned char>(bytes[0]), 0x04);
  EXPECT_EQ(static_cast<unsigned char>(bytes[3]), 0x01);
  std::int32_t i = 0;
  float f = 0;
  ASSERT_TRUE(io::read_le(ss, i));
  ASSERT_TRUE(io::read_le(ss, f));
  EXPECT_EQ(i, 0x01020304);
  EXPECT_EQ(f, 1.5f);
  EXPECT_FALSE(io::read_le(ss, i));
}

TEST(WorkerPool, VisitsEveryIndexOnce) {
  for (int workers : {1, 2, 4}) {
    const WorkerPool pool(workers);
    std::vector<int> hits(1000, 0);
    pool.parallel_for(hits.size(), 16, [&](std::size_t i) { hits[i] += 1; });
    EXPECT_TRUE(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  }
}

TEST(Errors, CarryStructuredDetails) {
  const ValidationError v({"a bad", "b bad"});
  EXPECT_EQ(v.failures().size(), 2u);
  EXPECT_NE(std::string(v.what()).find("b bad"), std::string::npos);
  const ParseError p("nu", "not a number");
  EXPECT_EQ(p.field(), "nu");
  const OutOfDomainError o(42);
  EXPECT_EQ(o.particle(), 42u);
  EXPECT_NE(std::string(o.what()).find("42"), std::string::npos);
}

}  // namespace
}  // namespace simready
