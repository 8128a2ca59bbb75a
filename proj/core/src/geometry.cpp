#include "dknn/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dknn/error.hpp"

namespace dknn {

double dot(std::span<const double> a, std::span<const double> b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) noexcept { return std::sqrt(dot(a, a)); }

double squared_distance(std::span<const double> a, std::span<const double> b) noexcept {
  double s[4] = {0.0, 0.0, 0.0, 0.0};
  const std::size_t n = a.size();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    for (std::size_t j = 0; j < 4; ++j) {
      const double t = a[i + j] - b[i + j];
      s[j] += t * t;
    }
  }
  for (; i < n; ++i) {
    const double t = a[i] - b[i];
    s[0] += t * t;
  }
  return (s[0] + s[1]) + (s[2] + s[3]);
}

Direction Direction::from_unit(std::span<const double> v) {
  for (double x : v) require(std::isfinite(x), Errc::kInvalidArgument, "non-finite coordinate");
  require(std::abs(norm(v) - 1.0) <= kUnitNormTol, Errc::kInvalidArgument, "direction is not unit norm");
  return Direction(std::vector<double>(v.begin(), v.end()));
}

Direction Direction::normalized(std::span<const double> v) {
  for (double x : v) require(std::isfinite(x), Errc::kInvalidArgument, "non-finite coordinate");
  const double n = norm(v);
  require(n > kZeroNormEps, Errc::kZeroVector, "cannot normalize a zero vector");
  std::vector<double> c(v.begin(), v.end());
  for (double& x : c) x /= n;
  return Direction(std::move(c));
}

Direction Direction::operator-() const {
  std::vector<double> c = coords_;
  for (double& x : c) x = -x;
  return Direction(std::move(c));
}

DirectionNorm split_direction_norm(std::span<const double> v) {
  require(v.size() >= 2, Errc::kBadShape, "vectors need at least two coordinates");
  const double n = norm(v);
  require(n > kZeroNormEps, Errc::kZeroVector, "zero vector has no direction");
  return {Direction::normalized(v), n};
}

double min_pairwise_angle(std::span<const Direction> dirs) {
  require(dirs.size() >= 2, Errc::kTooFewPoints, "min_pairwise_angle needs at least two directions");
  double best_dot = -1.0;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    for (std::size_t j = i + 1; j < dirs.size(); ++j) {
      best_dot = std::max(best_dot, std::clamp(dot(dirs[i].coords(), dirs[j].coords()), -1.0, 1.0));
    }
  }
  // acos is decreasing, so the largest clamped dot gives the smallest angle.
  return std::acos(best_dot);
}

namespace {

double one_minus_mean_norm(std::span<const double> sum, std::size_t n) {
  const double mean_norm = norm(sum) / static_cast<double>(n);
  return std::clamp(1.0 - mean_norm, 0.0, 1.0);
}

}  // namespace

double spherical_variance(std::span<const Direction> dirs) {
  require(!dirs.empty(), Errc::kEmptySet, "spherical_variance of an empty set");
  std::vector<double> sum(dirs.front().dim(), 0.0);
  for (const auto& s : dirs) {
    require(s.dim() == sum.size(), Errc::kBadShape, "mixed dimensions");
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += s[i];
  }
  return one_minus_mean_norm(sum, dirs.size());
}

double spherical_variance(PointsView unit_rows) {
  const std::size_t n = unit_rows.size();
  require(n > 0, Errc::kEmptySet, "spherical_variance of an empty set");
  std::vector<double> sum(unit_rows.dim, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = unit_rows.row(r);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += row[i];
  }
  return one_minus_mean_norm(sum, n);
}

GreatCircle sample_great_circle(std::size_t dim, Rng& rng) {
  require(dim >= 2, Errc::kBadShape, "great circles need dim >= 2");
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> buf(dim);
  auto draw = [&] {
    for (double& x : buf) x = gauss(rng);
  };

  Direction p;
  for (;;) {
    draw();
    if (norm(buf) > kDegenerateProjection) {
      p = Direction::normalized(buf);
      break;
    }
  }
  for (;;) {
    draw();
    const double proj = dot(buf, p.coords());
    for (std::size_t i = 0; i < dim; ++i) buf[i] -= proj * p[i];
    // A nearly parallel draw is a DegenerateDraw; retry.
    if (norm(buf) < kDegenerateProjection) continue;
    // Second Gram-Schmidt pass removes the rounding left by the first.
    const double proj2 = dot(buf, p.coords());
    for (std::size_t i = 0; i < dim; ++i) buf[i] -= proj2 * p[i];
    return {std::move(p), Direction::normalized(buf)};
  }
}

CircleProjection project_to_circle(PointsView points, const GreatCircle& circle) {
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  CircleProjection out;
  const std::size_t n = points.size();
  out.angles.reserve(n);
  out.kept.reserve(n);
  out.planar.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto s = points.row(i);
    const double a = dot(s, circle.p.coords());
    const double b = dot(s, circle.q.coords());
    if (std::hypot(a, b) < kDegenerateProjection) continue;
    double theta = std::atan2(b, a);
    if (theta < 0.0) theta += kTwoPi;
    if (theta >= kTwoPi) theta = 0.0;
    out.angles.push_back(theta);
    out.kept.push_back(i);
    out.planar.push_back({a, b});
  }
  return out;
}

CircleProjection project_to_circle(std::span<const Direction> dirs, const GreatCircle& circle) {
  const auto flat = flatten(dirs);
  return project_to_circle(PointsView{flat, circle.p.dim()}, circle);
}

std::vector<double> flatten(std::span<const Direction> dirs) {
  std::vector<double> flat;
  if (dirs.empty()) return flat;
  const std::size_t dim = dirs.front().dim();
  flat.reserve(dirs.size() * dim);
  for (const auto& s : dirs) {
    require(s.dim() == dim, Errc::kBadShape, "mixed dimensions");
    flat.insert(flat.end(), s.coords().begin(), s.coords().end());
  }
  return flat;
}

}  // namespace dknn
