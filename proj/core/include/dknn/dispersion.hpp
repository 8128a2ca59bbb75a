#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "dknn/geometry.hpp"
#include "dknn/vector_store.hpp"

namespace dknn {

enum class Regularizer { kMhe, kSliced };

// How a slice's distance to the nearest equidistant configuration is measured.
enum class DeltaVariant {
  kSquared,   // sum of squared circular deviations (smooth; default)
  kAbsolute,  // sum of absolute circular deviations
};

struct DispersionConfig {
  Regularizer regularizer = Regularizer::kSliced;
  double sigma = 1.0;  // MHE kernel scale
  double step_size = 0.01;
  std::size_t steps = 100;
  std::size_t circles_per_step = 1;
  double loss_weight = 1.0;
  std::uint64_t seed = 0;
  std::size_t batch_size = 4096;
  DeltaVariant delta = DeltaVariant::kSquared;

  void validate() const;
};

struct TraceRecord {
  std::size_t step = 0;
  double loss = 0.0;                // regularizer value on the batch drawn at this step
  double spherical_variance = 0.0;  // over every key in the store
};

struct DispersionTrace {
  std::vector<TraceRecord> records;  // steps + 1 entries, initial state first

  /// First step whose spherical variance is >= threshold, if any.
  std::optional<std::size_t> first_step_reaching(double threshold) const;
};

/// Objective value and its gradient with respect to the raw point coordinates
/// (row-major, same shape as the input).
struct LossAndGradient {
  double value = 0.0;
  std::vector<double> gradient;
};

/// Mean pairwise kernel exp(<s,s'>/sigma) over ordered pairs s != s'.
double mhe_energy(std::span<const Direction> dirs, double sigma);
double mhe_energy(PointsView points, double sigma);
LossAndGradient mhe_energy_gradient(PointsView points, double sigma);

/// Best fit of sorted angles to an equidistant configuration with a free offset.
struct CircleFit {
  double value = 0.0;
  double offset = 0.0;
  std::vector<double> deviations;  // signed circular deviation per input angle, input order
};

CircleFit fit_equidistant(std::span<const double> angles, DeltaVariant variant = DeltaVariant::kSquared);
double circle_delta(std::span<const double> angles, DeltaVariant variant = DeltaVariant::kSquared);

/// Mean over `circles` of circle_delta of the projected configuration.
double sliced_loss(std::span<const Direction> dirs, std::span<const GreatCircle> circles,
                   DeltaVariant variant = DeltaVariant::kSquared);
double sliced_loss(PointsView points, std::span<const GreatCircle> circles,
                   DeltaVariant variant = DeltaVariant::kSquared);
LossAndGradient sliced_loss_gradient(PointsView points, std::span<const GreatCircle> circles,
                                     DeltaVariant variant = DeltaVariant::kSquared);

struct DispersionResult {
  VectorStore store;
  DispersionTrace trace;
};

/// Increases angular dispersion of the keys by projected gradient descent on the
/// sphere. Each key keeps its label and its Euclidean norm.
DispersionResult disperse(const VectorStore& store, const DispersionConfig& cfg);

struct RegularizerComparison {
  DispersionTrace mhe;
  DispersionTrace sliced;
};

RegularizerComparison compare_regularizers(const VectorStore& store, const DispersionConfig& mhe_cfg,
                                           const DispersionConfig& sliced_cfg);

// Header: step,loss,spherical_variance
void write_trace_csv(std::ostream& out, const DispersionTrace& trace);

}  // namespace dknn
