#pragma once

// Seeded k-means (k-means++ seeding, Lloyd iterations) with deterministic
// tie-breaking and empty-cluster repair. All reductions run in index order,
// so results are bitwise reproducible for a given seed.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "tintforge/error.hpp"
#include "tintforge/rng.hpp"

namespace tintforge {

using Point = std::vector<double>;

struct KMeansResult {
  std::vector<std::size_t> assignments;
  std::vector<Point> centroids;
  std::vector<double> wcss_history;  // after each update step
  int iterations = 0;
  bool converged = false;

  double wcss() const { return wcss_history.empty() ? 0.0 : wcss_history.back(); }
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

namespace detail {

inline std::size_t nearest_centroid(std::span<const double> x, const std::vector<Point>& centroids) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = squared_distance(x, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

inline std::vector<Point> kmeanspp_seed(std::span<const Point> points, std::size_t k, rng::Engine& engine) {
  const std::size_t n = points.size();
  std::vector<Point> centroids;
  std::vector<bool> chosen(n, false);
  std::size_t first = rng::uniform_index(engine, n);
  centroids.push_back(points[first]);
  chosen[first] = true;
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points[i], centroids[0]);
  while (centroids.size() < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) total += d2[i];
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = rng::uniform01(engine) * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        acc += d2[i];
        pick = i;
        if (acc > target) break;
      }
    } else {
      // Every remaining point coincides with a centroid; take an unused index.
      std::vector<std::size_t> unused;
      for (std::size_t i = 0; i < n; ++i)
        if (!chosen[i]) unused.push_back(i);
      pick = unused[rng::uniform_index(engine, unused.size())];
    }
    chosen[pick] = true;
    centroids.push_back(points[pick]);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(points[i], centroids.back()));
  }
  return centroids;
}

// Moves the point farthest from its centroid in the largest cluster into each
// empty cluster. Returns the number of repairs.
inline int repair_empty_clusters(std::span<const Point> points, std::vector<std::size_t>& assign,
                                 std::vector<Point>& centroids) {
  int repairs = 0;
  const std::size_t k = centroids.size();
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<std::size_t> sizes(k, 0);
    for (auto a : assign) ++sizes[a];
    if (sizes[c] != 0) continue;
    const std::size_t donor = static_cast<std::size_t>(
        std::distance(sizes.begin(), std::max_element(sizes.begin(), sizes.end())));
    std::size_t far = points.size();
    double far_d = -1.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (assign[i] != donor) continue;
      const double d = squared_distance(points[i], centroids[donor]);
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    assign[far] = c;
    centroids[c] = points[far];
    ++repairs;
  }
  return repairs;
}

inline std::vector<Point> cluster_means(std::span<const Point> points, std::span<const std::size_t> assign,
                                        std::size_t k, std::size_t dim) {
  std::vector<Point> means(k, Point(dim, 0.0));
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    ++counts[assign[i]];
    for (std::size_t d = 0; d < dim; ++d) means[assign[i]][d] += points[i][d];
  }
  for (std::size_t c = 0; c < k; ++c)
    for (auto& v : means[c]) v /= static_cast<double>(counts[c]);
  return means;
}

inline double total_wcss(std::span<const Point> points, std::span<const std::size_t> assign,
                         const std::vector<Point>& centroids) {
  double s = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) s += squared_distance(points[i], centroids[assign[i]]);
  return s;
}

}  // namespace detail

namespace detail {

inline KMeansResult lloyd(std::span<const Point> points, std::size_t k, rng::Engine& engine, int max_iters,
                          std::size_t dim) {
  KMeansResult r;
  r.centroids = kmeanspp_seed(points, k, engine);
  r.assignments.assign(points.size(), 0);
  std::vector<std::size_t> previous;
  for (int it = 0; it < max_iters; ++it) {
    for (std::size_t i = 0; i < points.size(); ++i) r.assignments[i] = nearest_centroid(points[i], r.centroids);
    repair_empty_clusters(points, r.assignments, r.centroids);
    r.centroids = cluster_means(points, r.assignments, k, dim);
    r.wcss_history.push_back(total_wcss(points, r.assignments, r.centroids));
    r.iterations = it + 1;
    if (r.assignments == previous) {
      r.converged = true;
      break;
    }
    previous = r.assignments;
  }
  return r;
}

}  // namespace detail

/// Runs `restarts` independently seeded k-means++/Lloyd passes and keeps the
/// one with the lowest final WCSS (earliest on ties).
inline KMeansResult kmeans(std::span<const Point> points, std::size_t k, std::uint64_t seed, int max_iters = 100,
                           int restarts = 1) {
  if (points.empty()) throw input_error("kmeans: no points");
  if (k == 0) throw input_error("kmeans: k must be at least 1");
  if (k > points.size())
    throw input_error("kmeans: k=" + std::to_string(k) + " exceeds point count " + std::to_string(points.size()));
  if (max_iters < 1) throw input_error("kmeans: max_iters must be at least 1");
  const std::size_t dim = points.front().size();
  for (const auto& p : points)
    if (p.size() != dim) throw input_error("kmeans: points differ in dimension");

  if (restarts < 1) throw input_error("kmeans: restarts must be at least 1");
  KMeansResult best;
  for (int run = 0; run < restarts; ++run) {
    auto engine = rng::make_engine(seed, 0xC100u + static_cast<std::uint64_t>(run));
    auto r = detail::lloyd(points, k, engine, max_iters, dim);
    if (run == 0 || r.wcss() < best.wcss()) best = std::move(r);
  }
  return best;
}

/// Draws min(per_cluster, size) member indices from every cluster, uniformly
/// without replacement. Output is grouped by cluster id, ascending indices
/// within each cluster.
inline std::vector<std::size_t> sample_per_cluster(std::span<const std::size_t> assignments, std::size_t per_cluster,
                                                   std::uint64_t seed) {
  if (per_cluster < 1) throw input_error("per_cluster must be at least 1");
  std::size_t k = 0;
  for (auto a : assignments) k = std::max(k, a + 1);
  std::vector<std::vector<std::size_t>> members(k);
  for (std::size_t i = 0; i < assignments.size(); ++i) members[assignments[i]].push_back(i);
  auto engine = rng::make_engine(seed, 0x5A3Bu);
  std::vector<std::size_t> out;
  for (auto& m : members) {
    const std::size_t take = std::min(per_cluster, m.size());
    for (std::size_t j = 0; j < take; ++j) std::swap(m[j], m[j + rng::uniform_index(engine, m.size() - j)]);
    std::sort(m.begin(), m.begin() + static_cast<std::ptrdiff_t>(take));
    out.insert(out.end(), m.begin(), m.begin() + static_cast<std::ptrdiff_t>(take));
  }
  return out;
}

}  // namespace tintforge
