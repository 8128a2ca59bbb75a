#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "dknn/error.hpp"
#include "dknn/kmeans.hpp"
#include "test_util.hpp"

using namespace dknn;
using dknn::testing::gaussian_rows;

namespace {

std::size_t brute_argmin(PointsView rows, std::span<const double> h) {
  std::size_t best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < rows.size(); ++c) {
    double d = 0.0;
    for (std::size_t t = 0; t < rows.dim; ++t) d += (h[t] - rows.row(c)[t]) * (h[t] - rows.row(c)[t]);
    if (d < bd) {
      bd = d;
      best = c;
    }
  }
  return best;
}

KMeansModel model_from(std::vector<double> centroids, std::size_t dim) {
  KMeansModel m;
  m.dim = dim;
  m.centroids = std::move(centroids);
  return m;
}

}  // namespace

TEST(KMeans, SingleClusterIsMean) {
  Rng rng(1);
  const auto x = gaussian_rows(300, 5, rng);
  const auto m = kmeans_train(PointsView{x, 5}, 1, 25, 0);
  for (std::size_t t = 0; t < 5; ++t) {
    double mean = 0.0;
    for (std::size_t i = 0; i < 300; ++i) mean += x[i * 5 + t];
    EXPECT_NEAR(m.centroids[t], mean / 300.0, 1e-12);
  }
}

TEST(KMeans, KEqualsNRecoversPoints) {
  Rng rng(2);
  const auto x = gaussian_rows(20, 3, rng);
  const auto m = kmeans_train(PointsView{x, 3}, 20, 25, 7);
  std::vector<std::vector<double>> a, b;
  for (std::size_t i = 0; i < 20; ++i) {
    a.emplace_back(x.begin() + i * 3, x.begin() + i * 3 + 3);
    b.emplace_back(m.centroids.begin() + i * 3, m.centroids.begin() + i * 3 + 3);
  }
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  EXPECT_EQ(a, b);
  EXPECT_EQ(m.objective_history.back(), 0.0);
}

TEST(KMeans, ObjectiveNonIncreasing) {
  Rng rng(3);
  const auto x = gaussian_rows(1000, 8, rng);
  const auto m = kmeans_train(PointsView{x, 8}, 16, 25, 5);
  ASSERT_GE(m.objective_history.size(), 2u);
  for (std::size_t i = 1; i < m.objective_history.size(); ++i) {
    EXPECT_LE(m.objective_history[i], m.objective_history[i - 1] * (1 + 1e-12));
  }
  EXPECT_EQ(m.k(), 16u);
}

TEST(KMeans, DuplicatePointsKeepK) {
  // Many identical points force empty clusters that must be repaired.
  std::vector<double> x;
  for (int i = 0; i < 50; ++i) x.insert(x.end(), {1.0, 1.0});
  x.insert(x.end(), {5.0, 5.0, 9.0, 9.0, -3.0, 2.0});
  const auto m = kmeans_train(PointsView{x, 2}, 4, 10, 1);
  EXPECT_EQ(m.k(), 4u);
  for (double c : m.centroids) EXPECT_TRUE(std::isfinite(c));
}

TEST(KMeans, InsufficientData) {
  Rng rng(4);
  const auto x = gaussian_rows(3, 2, rng);
  try {
    kmeans_train(PointsView{x, 2}, 4, 5, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kInsufficientData);
  }
}

TEST(KMeans, Deterministic) {
  Rng rng(5);
  const auto x = gaussian_rows(500, 4, rng);
  const auto a = kmeans_train(PointsView{x, 4}, 8, 25, 11);
  const auto b = kmeans_train(PointsView{x, 4}, 8, 25, 11);
  EXPECT_EQ(a.centroids, b.centroids);
  EXPECT_EQ(a.objective_history, b.objective_history);
}

TEST(Assign, ExactHit) {
  Rng rng(6);
  const auto m = model_from(gaussian_rows(6, 4, rng), 4);
  const auto c3 = m.centroid(3);
  EXPECT_EQ(assign(m, c3), 3u);
}

TEST(Assign, TieGoesToLowerIndex) {
  // h = 0 is equidistant from centroids 1 and 4, both nearer than the rest.
  const auto m = model_from({5, 5, 1, 0, 9, 9, 7, -7, -1, 0}, 2);
  EXPECT_EQ(assign(m, std::vector<double>{0.0, 0.0}), 1u);
}

TEST(Assign, MatchesLinearScan) {
  Rng rng(7);
  const auto m = model_from(gaussian_rows(40, 6, rng), 6);
  const auto h = gaussian_rows(200, 6, rng);
  for (std::size_t i = 0; i < 200; ++i) {
    const std::span<const double> q{h.data() + i * 6, 6};
    EXPECT_EQ(assign(m, q), brute_argmin(m.view(), q));
  }
}

TEST(AssignAll, AgreesWithNearestRow) {
  Rng rng(8);
  const auto rows = gaussian_rows(300, 16, rng, 3.0);
  const auto pts = gaussian_rows(3000, 16, rng, 3.0);
  const auto out = assign_all(PointsView{rows, 16}, PointsView{pts, 16});
  for (std::size_t i = 0; i < 3000; ++i) {
    EXPECT_EQ(out[i], nearest_row(PointsView{rows, 16}, {pts.data() + i * 16, 16}));
  }
}

TEST(AssignAll, ExactTiesResolvedLikeScan) {
  const std::vector<double> rows{1, 0, -1, 0, 0, 1, 0, -1};
  const std::vector<double> pts{0, 0, 0.5, 0.5, -0.5, -0.5};
  const auto out = assign_all(PointsView{rows, 2}, PointsView{pts, 2});
  EXPECT_EQ(out, (std::vector<std::size_t>{0, 0, 1}));
}
