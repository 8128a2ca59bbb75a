#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dknn/vector_store.hpp"

namespace dknn {

struct KMeansConfig {
  std::size_t k = 1;
  std::size_t max_iters = 25;
  std::uint64_t seed = 0;
};

struct KMeansModel {
  std::size_t dim = 0;
  std::vector<double> centroids;  // k * dim, row-major
  KMeansConfig config;
  // Sum of squared distances to the assigned centroid: after seeding, then after
  // every Lloyd iteration.
  std::vector<double> objective_history;

  std::size_t k() const noexcept { return dim == 0 ? 0 : centroids.size() / dim; }
  std::span<const double> centroid(std::size_t i) const noexcept {
    return {centroids.data() + i * dim, dim};
  }
  PointsView view() const noexcept { return {centroids, dim}; }
};

/// Lloyd iterations from k-means++ seeding. Empty clusters are refilled with the
/// farthest member of the largest cluster, so K never shrinks.
KMeansModel kmeans_train(PointsView points, std::size_t k, std::size_t max_iters, std::uint64_t seed);

/// Nearest centroid by squared Euclidean distance; ties go to the lowest index.
std::size_t assign(const KMeansModel& model, std::span<const double> h);
std::size_t nearest_row(PointsView rows, std::span<const double> h);

/// Batched exact nearest-row assignment (same result as calling nearest_row per point).
std::vector<std::size_t> assign_all(PointsView rows, PointsView points);

}  // namespace dknn
