#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "dknn/geometry.hpp"
#include "dknn/rng.hpp"
#include "dknn/vector_store.hpp"

namespace dknn {

struct PowerSphericalParams {
  Direction mu;
  double kappa = 0.0;
};

struct SynthSpec {
  std::size_t dim = 128;
  std::size_t count = 0;
  std::size_t components = 5;
  double kappa = 1.0;
  double norm_lo = 1.0;
  double norm_hi = 100.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Draws `n` unit vectors from the power spherical distribution.
std::vector<Direction> sample_power_spherical(const PowerSphericalParams& params, std::size_t n,
                                              std::size_t dim, Rng& rng);

/// Mixture of `components` power spherical distributions sharing kappa, with means
/// drawn uniformly on the sphere and key lengths uniform on [norm_lo, norm_hi].
/// Each key is labelled with the id of the component it came from.
VectorStore make_synthetic_store(const SynthSpec& spec);

}  // namespace dknn
