#include "dknn/synth.hpp"

#include <algorithm>
#include <cmath>

#include "dknn/error.hpp"

namespace dknn {

namespace {

Direction uniform_direction(std::size_t dim, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> v(dim);
  for (;;) {
    for (double& x : v) x = gauss(rng);
    if (norm(v) > 1e-8) return Direction::normalized(v);
  }
}

// Exact sampler: t = 2z - 1 with z ~ Beta((d-1)/2 + kappa, (d-1)/2), a uniform
// tangent direction scaled by sqrt(1 - t^2), then the Householder reflection that
// maps e1 onto mu.
class PowerSphericalSampler {
 public:
  PowerSphericalSampler(const PowerSphericalParams& params, std::size_t dim)
      : mu_(params.mu),
        dim_(dim),
        alpha_(0.5 * static_cast<double>(dim - 1) + params.kappa, 1.0),
        beta_(0.5 * static_cast<double>(dim - 1), 1.0),
        u_(dim, 0.0),
        buf_(dim) {
    require(dim >= 2, Errc::kBadShape, "power spherical sampling needs dim >= 2");
    require(mu_.dim() == dim, Errc::kBadShape, "mean direction has the wrong dimension");
    require(params.kappa >= 0.0 && std::isfinite(params.kappa), Errc::kInvalidArgument, "kappa must be >= 0");
    for (std::size_t i = 0; i < dim; ++i) u_[i] = (i == 0 ? 1.0 : 0.0) - mu_[i];
    const double un = norm(u_);
    reflect_ = un >= 1e-12;
    if (reflect_) {
      for (double& x : u_) x /= un;
    }
  }

  Direction operator()(Rng& rng) {
    const double x = alpha_(rng);
    const double y = beta_(rng);
    const double t = 2.0 * (x / (x + y)) - 1.0;
    const double radial = std::sqrt(std::max(0.0, 1.0 - t * t));

    std::normal_distribution<double> gauss(0.0, 1.0);
    double vn = 0.0;
    do {
      vn = 0.0;
      for (std::size_t i = 1; i < dim_; ++i) {
        buf_[i] = gauss(rng);
        vn += buf_[i] * buf_[i];
      }
      vn = std::sqrt(vn);
    } while (vn <= 1e-12);
    buf_[0] = t;
    for (std::size_t i = 1; i < dim_; ++i) buf_[i] *= radial / vn;

    if (reflect_) {
      const double proj = 2.0 * dot(u_, buf_);
      for (std::size_t i = 0; i < dim_; ++i) buf_[i] -= proj * u_[i];
    }
    return Direction::normalized(buf_);
  }

 private:
  Direction mu_;
  std::size_t dim_;
  std::gamma_distribution<double> alpha_;
  std::gamma_distribution<double> beta_;
  std::vector<double> u_;
  bool reflect_ = false;
  std::vector<double> buf_;
};

}  // namespace

void SynthSpec::validate() const {
  require(dim >= 2, Errc::kBadShape, "dim must be >= 2");
  require(components >= 1, Errc::kInvalidArgument, "components must be >= 1");
  require(kappa >= 0.0 && std::isfinite(kappa), Errc::kInvalidArgument, "kappa must be >= 0");
  require(norm_lo > 0.0 && norm_lo <= norm_hi && std::isfinite(norm_hi), Errc::kInvalidArgument,
          "norm range must satisfy 0 < lo <= hi");
}

std::vector<Direction> sample_power_spherical(const PowerSphericalParams& params, std::size_t n,
                                              std::size_t dim, Rng& rng) {
  PowerSphericalSampler sampler(params, dim);
  std::vector<Direction> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sampler(rng));
  return out;
}

VectorStore make_synthetic_store(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);

  std::vector<PowerSphericalSampler> samplers;
  samplers.reserve(spec.components);
  for (std::size_t c = 0; c < spec.components; ++c) {
    samplers.emplace_back(PowerSphericalParams{uniform_direction(spec.dim, rng), spec.kappa}, spec.dim);
  }

  std::uniform_int_distribution<std::size_t> pick(0, spec.components - 1);
  std::uniform_real_distribution<double> length(spec.norm_lo, spec.norm_hi);
  VectorStore store(spec.dim);
  store.reserve(spec.count);
  std::vector<double> key(spec.dim);
  for (std::size_t i = 0; i < spec.count; ++i) {
    const std::size_t c = pick(rng);
    const Direction dir = samplers[c](rng);
    const double len = spec.norm_lo == spec.norm_hi ? spec.norm_lo : length(rng);
    for (std::size_t t = 0; t < spec.dim; ++t) key[t] = dir[t] * len;
    store.push_back(key, static_cast<std::uint32_t>(c));
  }
  return store;
}

}  // namespace dknn
