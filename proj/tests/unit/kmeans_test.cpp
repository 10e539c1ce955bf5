#include <gtest/gtest.h>

#include <random>
#include <set>

#include "tintforge/kmeans.hpp"

using namespace tintforge;

namespace {

std::vector<Point> random_points(std::uint64_t seed, std::size_t n, std::size_t dim) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0, 1);
  std::vector<Point> pts(n, Point(dim));
  for (auto& p : pts)
    for (auto& x : p) x = nd(rng);
  return pts;
}

double partition_wcss(const std::vector<Point>& pts, const std::vector<std::size_t>& assign, std::size_t k) {
  const auto means = detail::cluster_means(pts, assign, k, pts.front().size());
  return detail::total_wcss(pts, assign, means);
}

}  // namespace

TEST(KMeans, KEqualsCountGivesSingletons) {
  const auto pts = random_points(1, 7, 3);
  const auto r = kmeans(pts, 7, 42);
  EXPECT_EQ(r.wcss(), 0.0);
  EXPECT_EQ(std::set<std::size_t>(r.assignments.begin(), r.assignments.end()).size(), 7u);
}

TEST(KMeans, TwoBlobsMatchBruteForcePartition) {
  const std::vector<Point> pts{{0.0, 0.0}, {0.3, 0.1}, {0.1, 0.4}, {9.0, 9.0}, {9.2, 8.7}, {8.8, 9.3}};
  // Exhaustive search over all 2-partitions with both parts non-empty.
  double best = 1e300;
  std::vector<std::size_t> best_assign;
  for (unsigned mask = 1; mask + 1 < (1u << pts.size()); ++mask) {
    std::vector<std::size_t> a(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) a[i] = (mask >> i) & 1u;
    const double w = partition_wcss(pts, a, 2);
    if (w < best) best = w, best_assign = a;
  }
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto r = kmeans(pts, 2, seed);
    EXPECT_NEAR(r.wcss(), best, 1e-12);
    for (std::size_t i = 1; i < 3; ++i) EXPECT_EQ(r.assignments[i], r.assignments[0]);
    for (std::size_t i = 4; i < 6; ++i) EXPECT_EQ(r.assignments[i], r.assignments[3]);
    EXPECT_NE(r.assignments[0], r.assignments[3]);
    EXPECT_EQ(r.assignments[0] == r.assignments[3], best_assign[0] == best_assign[3]);
  }
}

TEST(KMeans, DeterministicForSeed) {
  const auto pts = random_points(2, 200, 5);
  const auto a = kmeans(pts, 8, 11, 100, 3), b = kmeans(pts, 8, 11, 100, 3);
  EXPECT_EQ(a.assignments, b.assignments);
  EXPECT_EQ(a.wcss_history, b.wcss_history);
  EXPECT_EQ(a.centroids, b.centroids);
}

TEST(KMeans, WcssNonIncreasingAndClustersNonEmpty) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto pts = random_points(seed + 100, 120, 4);
    const auto r = kmeans(pts, 10, seed);
    for (std::size_t i = 1; i < r.wcss_history.size(); ++i)
      EXPECT_LE(r.wcss_history[i], r.wcss_history[i - 1] + 1e-12) << "seed " << seed;
    std::vector<std::size_t> sizes(10, 0);
    for (auto a : r.assignments) ++sizes[a];
    for (auto s : sizes) EXPECT_GT(s, 0u);
    EXPECT_NEAR(r.wcss(), partition_wcss(pts, r.assignments, 10), 1e-9);
  }
}

TEST(KMeans, DuplicatePointsStillFillEveryCluster) {
  std::vector<Point> pts(10, Point{1.0, 1.0});
  pts.push_back({5.0, 5.0});
  const auto r = kmeans(pts, 4, 3);
  std::vector<std::size_t> sizes(4, 0);
  for (auto a : r.assignments) ++sizes[a];
  for (auto s : sizes) EXPECT_GT(s, 0u);
}

TEST(KMeans, RestartsNeverWorsenWcss) {
  const auto pts = random_points(9, 300, 6);
  const auto one = kmeans(pts, 12, 5, 100, 1);
  const auto many = kmeans(pts, 12, 5, 100, 16);
  EXPECT_LE(many.wcss(), one.wcss());
}

TEST(KMeans, Errors) {
  const auto pts = random_points(3, 4, 2);
  EXPECT_THROW(kmeans(pts, 5, 1), Error);
  EXPECT_THROW(kmeans(pts, 0, 1), Error);
  EXPECT_THROW(kmeans(std::vector<Point>{}, 1, 1), Error);
  EXPECT_THROW(kmeans(std::vector<Point>{{1.0}, {1.0, 2.0}}, 1, 1), Error);
  EXPECT_THROW(kmeans(pts, 2, 1, 100, 0), Error);
}

TEST(Sample, TwentyClustersOfFive) {
  std::vector<std::size_t> assign;
  for (std::size_t c = 0; c < 20; ++c)
    for (int i = 0; i < 11; ++i) assign.push_back(c);
  const auto ids = sample_per_cluster(assign, 5, 42);
  ASSERT_EQ(ids.size(), 100u);
  EXPECT_EQ(std::set<std::size_t>(ids.begin(), ids.end()).size(), 100u);
  for (std::size_t c = 0; c < 20; ++c)
    for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(assign[ids[c * 5 + j]], c);
  EXPECT_EQ(ids, sample_per_cluster(assign, 5, 42));
  EXPECT_NE(ids, sample_per_cluster(assign, 5, 43));
}

TEST(Sample, SmallClusterYieldsAllMembers) {
  const std::vector<std::size_t> assign{0, 1, 0, 1, 1, 0, 1, 1, 1};
  const auto ids = sample_per_cluster(assign, 5, 1);
  ASSERT_EQ(ids.size(), 8u);
  EXPECT_EQ(std::vector<std::size_t>(ids.begin(), ids.begin() + 3), (std::vector<std::size_t>{0, 2, 5}));
  EXPECT_THROW(sample_per_cluster(assign, 0, 1), Error);
}

TEST(Sample, RoughlyUniform) {
  std::vector<std::size_t> assign(10, 0);
  std::vector<int> counts(10, 0);
  for (std::uint64_t seed = 0; seed < 4000; ++seed)
    for (auto i : sample_per_cluster(assign, 3, seed)) ++counts[i];
  for (int c : counts) EXPECT_NEAR(c, 1200, 150);
}
