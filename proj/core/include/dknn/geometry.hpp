#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "dknn/rng.hpp"
#include "dknn/vector_store.hpp"

namespace dknn {

using Vector = std::vector<double>;

inline constexpr double kZeroNormEps = 1e-12;
inline constexpr double kUnitNormTol = 1e-10;
// Points whose projection onto a great-circle plane is shorter than this are dropped.
inline constexpr double kDegenerateProjection = 1e-8;

double dot(std::span<const double> a, std::span<const double> b) noexcept;
double norm(std::span<const double> a) noexcept;
double squared_distance(std::span<const double> a, std::span<const double> b) noexcept;

/// A point on the unit sphere. The unit-norm invariant is checked on construction.
class Direction {
 public:
  Direction() = default;

  /// Accepts `v` as-is; throws kInvalidArgument unless | |v| - 1 | <= 1e-10.
  static Direction from_unit(std::span<const double> v);
  /// Scales `v` to unit length; throws kZeroVector when |v| <= 1e-12.
  static Direction normalized(std::span<const double> v);

  std::size_t dim() const noexcept { return coords_.size(); }
  std::span<const double> coords() const noexcept { return coords_; }
  double operator[](std::size_t i) const noexcept { return coords_[i]; }
  Direction operator-() const;

  friend bool operator==(const Direction&, const Direction&) = default;

 private:
  explicit Direction(std::vector<double> coords) : coords_(std::move(coords)) {}
  std::vector<double> coords_;
};

/// A great circle given by an orthonormal pair spanning its plane.
struct GreatCircle {
  Direction p;
  Direction q;
};

struct DirectionNorm {
  Direction direction;
  double norm = 0.0;
};

DirectionNorm split_direction_norm(std::span<const double> v);

/// Smallest angle over all unordered pairs, dot products clamped to [-1, 1].
double min_pairwise_angle(std::span<const Direction> dirs);

/// 1 - |mean of dirs|. Zero for a fully concentrated set; one when the mean vanishes.
///
/// Note the usual prose reading ("close to 1 means concentrated") is the opposite of
/// this formula; the formula is what is implemented.
double spherical_variance(std::span<const Direction> dirs);
/// Same quantity over rows of `unit_rows`, which must already be unit vectors.
double spherical_variance(PointsView unit_rows);

GreatCircle sample_great_circle(std::size_t dim, Rng& rng);

struct CircleProjection {
  std::vector<double> angles;                 // polar angle in [0, 2pi) per kept point
  std::vector<std::size_t> kept;              // input index of each kept point
  std::vector<std::array<double, 2>> planar;  // (<s,p>, <s,q>) per kept point
};

/// Projects each point onto the plane of `circle`. Points with planar norm below
/// kDegenerateProjection are excluded.
CircleProjection project_to_circle(std::span<const Direction> dirs, const GreatCircle& circle);
/// Raw-coordinate variant used by the optimizers; rows need not be unit length.
CircleProjection project_to_circle(PointsView points, const GreatCircle& circle);

std::vector<double> flatten(std::span<const Direction> dirs);

}  // namespace dknn
