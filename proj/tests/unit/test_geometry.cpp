#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dknn/error.hpp"
#include "dknn/geometry.hpp"
#include "test_util.hpp"

using namespace dknn;
using dknn::testing::basis;
using dknn::testing::random_directions;

namespace {

constexpr double kPi = std::numbers::pi;

double circular_gap(double a, double b) {
  double d = std::fmod(a - b, 2.0 * kPi);
  if (d < 0) d += 2.0 * kPi;
  return d;
}

}  // namespace

TEST(SplitDirectionNorm, PythagoreanTriple) {
  const auto r = split_direction_norm(std::vector<double>{3.0, 4.0});
  EXPECT_DOUBLE_EQ(r.norm, 5.0);
  EXPECT_DOUBLE_EQ(r.direction[0], 0.6);
  EXPECT_DOUBLE_EQ(r.direction[1], 0.8);
}

TEST(SplitDirectionNorm, UnitBasisIsIdentity) {
  const auto r = split_direction_norm(basis(5, 0));
  EXPECT_EQ(r.norm, 1.0);
  EXPECT_EQ(std::vector<double>(r.direction.coords().begin(), r.direction.coords().end()), basis(5, 0));
}

TEST(SplitDirectionNorm, ReconstructsRandomVectors) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto v = dknn::testing::gaussian_rows(1, 128, rng, 10.0);
    const auto r = split_direction_norm(v);
    double err = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) err = std::max(err, std::abs(r.direction[i] * r.norm - v[i]));
    EXPECT_LT(err / norm(v), 1e-10);
  }
}

TEST(SplitDirectionNorm, ZeroVectorThrows) {
  try {
    split_direction_norm(std::vector<double>{0.0, 1e-13});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kZeroVector);
  }
}

TEST(DirectionTest, FromUnitChecksNorm) {
  EXPECT_NO_THROW(Direction::from_unit(basis(3, 1)));
  EXPECT_THROW(Direction::from_unit(std::vector<double>{1.0, 1e-4}), Error);
}

TEST(MinPairwiseAngle, OrthogonalPair) {
  const std::vector<Direction> s{Direction::from_unit(basis(2, 0)), Direction::from_unit(basis(2, 1))};
  EXPECT_DOUBLE_EQ(min_pairwise_angle(s), kPi / 2);
}

TEST(MinPairwiseAngle, DuplicateIsZero) {
  const std::vector<Direction> s{Direction::from_unit(basis(3, 0)), Direction::from_unit(basis(3, 0))};
  EXPECT_EQ(min_pairwise_angle(s), 0.0);
}

TEST(MinPairwiseAngle, MatchesDoubleLoop) {
  Rng rng(5);
  for (std::size_t n : {2, 3, 50, 200}) {
    const auto s = random_directions(n, 8, rng);
    double best = kPi;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        double c = 0.0;
        for (std::size_t t = 0; t < 8; ++t) c += s[i][t] * s[j][t];
        best = std::min(best, std::acos(std::clamp(c, -1.0, 1.0)));
      }
    }
    EXPECT_EQ(min_pairwise_angle(s), best) << n;
  }
}

TEST(MinPairwiseAngle, TooFewPoints) {
  const std::vector<Direction> s{Direction::from_unit(basis(3, 0))};
  try {
    min_pairwise_angle(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kTooFewPoints);
  }
}

TEST(SphericalVariance, Concentrated) {
  const std::vector<Direction> s{Direction::from_unit(basis(3, 0)), Direction::from_unit(basis(3, 0))};
  EXPECT_EQ(spherical_variance(s), 0.0);
}

TEST(SphericalVariance, Antipodal) {
  const auto e1 = Direction::from_unit(basis(3, 0));
  const std::vector<Direction> s{e1, -e1};
  EXPECT_EQ(spherical_variance(s), 1.0);
}

TEST(SphericalVariance, FourPointCancellation) {
  Rng rng(3);
  const auto x = random_directions(1, 6, rng)[0];
  const std::vector<Direction> s{x, x, -x, -x};
  EXPECT_EQ(spherical_variance(s), 1.0);
}

TEST(SphericalVariance, EmptySet) {
  try {
    spherical_variance(std::span<const Direction>{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kEmptySet);
  }
}

TEST(SphericalVariance, PermutationAndRotationInvariant) {
  Rng rng(8);
  auto s = random_directions(40, 4, rng);
  const double base = spherical_variance(s);
  std::shuffle(s.begin(), s.end(), rng);
  EXPECT_NEAR(spherical_variance(s), base, 1e-10);

  // Rotation in the (0,1) plane followed by one in the (2,3) plane.
  const double a = 0.7, b = -1.9;
  std::vector<Direction> rotated;
  for (const auto& d : s) {
    std::vector<double> v{std::cos(a) * d[0] - std::sin(a) * d[1], std::sin(a) * d[0] + std::cos(a) * d[1],
                          std::cos(b) * d[2] - std::sin(b) * d[3], std::sin(b) * d[2] + std::cos(b) * d[3]};
    rotated.push_back(Direction::normalized(v));
  }
  EXPECT_NEAR(spherical_variance(rotated), base, 1e-10);
}

TEST(SphericalVariance, ViewOverloadAgrees) {
  Rng rng(9);
  const auto s = random_directions(30, 5, rng);
  const auto flat = flatten(s);
  EXPECT_NEAR(spherical_variance(PointsView{flat, 5}), spherical_variance(s), 1e-15);
}

TEST(GreatCircleSampling, PlaneBasisInTwoDimensions) {
  Rng rng(1);
  for (int i = 0; i < 20; ++i) {
    const auto c = sample_great_circle(2, rng);
    EXPECT_NEAR(norm(c.p.coords()), 1.0, 1e-12);
    EXPECT_NEAR(norm(c.q.coords()), 1.0, 1e-12);
    EXPECT_LT(std::abs(dot(c.p.coords(), c.q.coords())), 1e-10);
  }
}

TEST(GreatCircleSampling, OrthonormalInHighDimension) {
  Rng rng(2);
  for (int i = 0; i < 500; ++i) {
    const auto c = sample_great_circle(64, rng);
    EXPECT_LT(std::abs(dot(c.p.coords(), c.q.coords())), 1e-10);
  }
}

TEST(GreatCircleSampling, MeanOfPIsCentred) {
  Rng rng(4);
  std::vector<double> mean(16, 0.0);
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto c = sample_great_circle(16, rng);
    for (std::size_t t = 0; t < 16; ++t) mean[t] += c.p[t] / n;
  }
  for (double m : mean) EXPECT_LT(std::abs(m), 0.05);
}

TEST(GreatCircleSampling, RejectsDimensionOne) {
  Rng rng(0);
  EXPECT_THROW(sample_great_circle(1, rng), Error);
}

TEST(ProjectToCircle, AxisAlignedPoints) {
  const GreatCircle c{Direction::from_unit(basis(3, 0)), Direction::from_unit(basis(3, 1))};
  const std::vector<Direction> s{Direction::from_unit(basis(3, 0)), Direction::from_unit(basis(3, 1)),
                                 Direction::from_unit(basis(3, 2))};
  const auto proj = project_to_circle(s, c);
  ASSERT_EQ(proj.angles.size(), 2u);
  EXPECT_EQ(proj.kept, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(proj.angles[0], 0.0);
  EXPECT_DOUBLE_EQ(proj.angles[1], kPi / 2);
}

TEST(ProjectToCircle, AnglesInRange) {
  Rng rng(6);
  const auto s = random_directions(500, 7, rng);
  const auto c = sample_great_circle(7, rng);
  const auto proj = project_to_circle(s, c);
  for (double a : proj.angles) {
    EXPECT_GE(a, 0.0);
    EXPECT_LT(a, 2 * kPi);
  }
}

TEST(ProjectToCircle, InPlaneRotationPreservesGaps) {
  Rng rng(7);
  const auto s = random_directions(100, 9, rng);
  const auto c = sample_great_circle(9, rng);
  const double phi = 1.234;
  std::vector<double> p2(9), q2(9);
  for (std::size_t t = 0; t < 9; ++t) {
    p2[t] = std::cos(phi) * c.p[t] + std::sin(phi) * c.q[t];
    q2[t] = -std::sin(phi) * c.p[t] + std::cos(phi) * c.q[t];
  }
  const GreatCircle c2{Direction::normalized(p2), Direction::normalized(q2)};
  const auto a = project_to_circle(s, c);
  const auto b = project_to_circle(s, c2);
  ASSERT_EQ(a.kept, b.kept);
  for (std::size_t i = 1; i < a.angles.size(); ++i) {
    const double ga = circular_gap(a.angles[i], a.angles[0]);
    const double gb = circular_gap(b.angles[i], b.angles[0]);
    const double diff = std::min(std::abs(ga - gb), 2 * kPi - std::abs(ga - gb));
    EXPECT_LT(diff, 1e-8);
  }
}
