#include "dknn/kmeans.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>

#include "dknn/error.hpp"
#include "dknn/geometry.hpp"
#include "dknn/rng.hpp"

namespace dknn {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
constexpr std::size_t kAssignBlock = 1024;

double objective(PointsView points, const std::vector<double>& centroids, std::size_t dim,
                 const std::vector<std::size_t>& assignment) {
  double total = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    total += squared_distance(points.row(i), {centroids.data() + assignment[i] * dim, dim});
  }
  return total;
}

std::vector<double> kmeans_plus_plus(PointsView points, std::size_t k, Rng& rng) {
  const std::size_t n = points.size();
  const std::size_t dim = points.dim;
  std::vector<double> centroids(k * dim);
  std::vector<double> d2(n);

  auto place = [&](std::size_t c, std::size_t idx) {
    const auto row = points.row(idx);
    std::copy(row.begin(), row.end(), centroids.begin() + static_cast<std::ptrdiff_t>(c * dim));
  };

  std::uniform_int_distribution<std::size_t> uniform(0, n - 1);
  place(0, uniform(rng));
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points.row(i), {centroids.data(), dim});

  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    std::size_t chosen = 0;
    if (total > 0.0) {
      const double r = std::uniform_real_distribution<double>(0.0, total)(rng);
      double cum = 0.0;
      std::size_t last_positive = 0;
      bool found = false;
      for (std::size_t i = 0; i < n; ++i) {
        if (d2[i] <= 0.0) continue;
        last_positive = i;
        cum += d2[i];
        if (cum > r) {
          chosen = i;
          found = true;
          break;
        }
      }
      if (!found) chosen = last_positive;
    } else {
      chosen = uniform(rng);
    }
    place(c, chosen);
    const std::span<const double> cc{centroids.data() + c * dim, dim};
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(points.row(i), cc));
  }
  return centroids;
}

}  // namespace

std::size_t nearest_row(PointsView rows, std::span<const double> h) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < rows.size(); ++c) {
    const double d = squared_distance(h, rows.row(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

std::vector<std::size_t> assign_all(PointsView rows, PointsView points) {
  const std::size_t k = rows.size();
  const std::size_t n = points.size();
  const std::size_t dim = rows.dim;
  require(k > 0, Errc::kInvalidArgument, "no centroids");
  require(points.dim == dim, Errc::kBadShape, "dimension mismatch");
  std::vector<std::size_t> out(n);

  const Eigen::Map<const RowMatrix> cmat(rows.data.data(), static_cast<Eigen::Index>(k),
                                         static_cast<Eigen::Index>(dim));
  const Eigen::VectorXd cnorm = cmat.rowwise().squaredNorm();
  const double max_cnorm = cnorm.maxCoeff();
  RowMatrix prod;
  std::vector<std::size_t> candidates;

  for (std::size_t start = 0; start < n; start += kAssignBlock) {
    const std::size_t b = std::min(kAssignBlock, n - start);
    const Eigen::Map<const RowMatrix> xmat(points.data.data() + start * dim, static_cast<Eigen::Index>(b),
                                           static_cast<Eigen::Index>(dim));
    prod.noalias() = xmat * cmat.transpose();
    // |x - c|^2 - |x|^2 = |c|^2 - 2<x, c>; the expansion only shortlists, the
    // exact distance decides whenever two centroids are within rounding range.
    prod = (-2.0 * prod).rowwise() + cnorm.transpose();
    for (std::size_t i = 0; i < b; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      Eigen::Index best_idx = 0;
      const double best = prod.row(ii).minCoeff(&best_idx);
      std::size_t best_c = static_cast<std::size_t>(best_idx);
      const double xnorm = xmat.row(ii).squaredNorm();
      const double margin = 1e-9 * (xnorm + max_cnorm) + 1e-300;
      candidates.clear();
      const double* row = prod.data() + i * k;
      for (std::size_t c = 0; c < k; ++c) {
        if (row[c] <= best + margin) candidates.push_back(c);
      }
      if (candidates.size() > 1) {
        const auto x = points.row(start + i);
        double exact_best = std::numeric_limits<double>::infinity();
        for (std::size_t c : candidates) {
          const double d = squared_distance(x, rows.row(c));
          if (d < exact_best) {
            exact_best = d;
            best_c = c;
          }
        }
      }
      out[start + i] = best_c;
    }
  }
  return out;
}

std::size_t assign(const KMeansModel& model, std::span<const double> h) {
  require(model.k() > 0, Errc::kInvalidArgument, "untrained model");
  require(h.size() == model.dim, Errc::kBadShape, "dimension mismatch");
  return nearest_row(model.view(), h);
}

KMeansModel kmeans_train(PointsView points, std::size_t k, std::size_t max_iters, std::uint64_t seed) {
  require(k >= 1, Errc::kInvalidArgument, "k must be >= 1");
  require(points.size() >= k, Errc::kInsufficientData, "fewer points than clusters");
  const std::size_t n = points.size();
  const std::size_t dim = points.dim;

  KMeansModel model;
  model.dim = dim;
  model.config = {k, max_iters, seed};
  Rng rng(seed);
  model.centroids = kmeans_plus_plus(points, k, rng);

  auto assignment = assign_all(model.view(), points);
  model.objective_history.push_back(objective(points, model.centroids, dim, assignment));

  std::vector<double> sums(k * dim);
  std::vector<std::size_t> counts(k);
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = points.row(i);
      double* s = sums.data() + assignment[i] * dim;
      for (std::size_t t = 0; t < dim; ++t) s[t] += row[t];
      ++counts[assignment[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      const double inv = 1.0 / static_cast<double>(counts[c]);
      for (std::size_t t = 0; t < dim; ++t) model.centroids[c * dim + t] = sums[c * dim + t] * inv;
    }

    // Refill empty clusters with the farthest member of the current largest one.
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      const auto largest = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
      if (counts[largest] < 2) break;
      const std::span<const double> lc{model.centroids.data() + largest * dim, dim};
      std::size_t far = n;
      double far_d = -1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (assignment[i] != largest) continue;
        const double d = squared_distance(points.row(i), lc);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      const auto x = points.row(far);
      assignment[far] = c;
      counts[c] = 1;
      --counts[largest];
      const double inv = 1.0 / static_cast<double>(counts[largest]);
      for (std::size_t t = 0; t < dim; ++t) {
        sums[largest * dim + t] -= x[t];
        sums[c * dim + t] = x[t];
        model.centroids[c * dim + t] = x[t];
        model.centroids[largest * dim + t] = sums[largest * dim + t] * inv;
      }
    }

    auto next = assign_all(model.view(), points);
    const bool changed = next != assignment;
    assignment = std::move(next);
    model.objective_history.push_back(objective(points, model.centroids, dim, assignment));
    if (!changed) break;
  }
  return model;
}

}  // namespace dknn
