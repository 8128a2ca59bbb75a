#include "dknn/dispersion.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "dknn/error.hpp"

namespace dknn {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Into [-pi, pi).
double wrap_to_pi(double x) {
  x = std::fmod(x + kPi, kTwoPi);
  if (x < 0.0) x += kTwoPi;
  return x - kPi;
}

// Into [0, 2pi).
double wrap_to_circle(double x) {
  x = std::fmod(x, kTwoPi);
  if (x < 0.0) x += kTwoPi;
  if (x >= kTwoPi) x = 0.0;
  return x;
}

// Global minimizer over o of sum_i wrap(rho_i - o)^2. Sweeping o across [0, 2pi)
// each residual changes branch exactly once, at (rho_i + pi) mod 2pi; between two
// consecutive breakpoints the objective is an ordinary quadratic in o.
double least_squares_offset(std::span<const double> rho) {
  const std::size_t n = rho.size();
  std::vector<double> x(n);
  std::vector<double> breaks(n);
  double s1 = 0.0;
  double s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = wrap_to_pi(rho[i]);
    breaks[i] = wrap_to_circle(rho[i] + kPi);
    s1 += x[i];
    s2 += x[i] * x[i];
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return breaks[a] < breaks[b] || (breaks[a] == breaks[b] && a < b);
  });

  const double nd = static_cast<double>(n);
  double best = std::numeric_limits<double>::infinity();
  double best_o = 0.0;
  double lo = 0.0;
  for (std::size_t j = 0; j <= n; ++j) {
    const double hi = j < n ? breaks[order[j]] : kTwoPi;
    const double o = std::clamp(s1 / nd, lo, hi);
    const double f = s2 - 2.0 * o * s1 + nd * o * o;
    if (f < best) {
      best = f;
      best_o = o;
    }
    if (j < n) {
      const std::size_t i = order[j];
      s2 += 4.0 * kPi * x[i] + 4.0 * kPi * kPi;
      s1 += kTwoPi;
      x[i] += kTwoPi;
    }
    lo = hi;
  }
  return wrap_to_circle(best_o);
}

// The absolute-deviation objective attains its minimum at one of the residuals
// (a circular median), so checking each candidate is exact.
double least_absolute_offset(std::span<const double> rho) {
  double best = std::numeric_limits<double>::infinity();
  double best_o = 0.0;
  for (double o : rho) {
    double f = 0.0;
    for (double r : rho) f += std::abs(wrap_to_pi(r - o));
    if (f < best) {
      best = f;
      best_o = o;
    }
  }
  return best_o;
}

}  // namespace

void DispersionConfig::validate() const {
  require(sigma > 0.0 && std::isfinite(sigma), Errc::kInvalidArgument, "sigma must be > 0");
  require(step_size > 0.0 && std::isfinite(step_size), Errc::kInvalidArgument, "step_size must be > 0");
  require(circles_per_step >= 1, Errc::kInvalidArgument, "circles_per_step must be >= 1");
  require(loss_weight >= 0.0 && std::isfinite(loss_weight), Errc::kInvalidArgument, "loss_weight must be >= 0");
  require(batch_size >= 1, Errc::kInvalidArgument, "batch_size must be >= 1");
}

std::optional<std::size_t> DispersionTrace::first_step_reaching(double threshold) const {
  for (const auto& r : records) {
    if (r.spherical_variance >= threshold) return r.step;
  }
  return std::nullopt;
}

double mhe_energy(std::span<const Direction> dirs, double sigma) {
  require(dirs.size() >= 2, Errc::kTooFewPoints, "mhe_energy needs at least two directions");
  const auto flat = flatten(dirs);
  return mhe_energy(PointsView{flat, dirs.front().dim()}, sigma);
}

double mhe_energy(PointsView points, double sigma) {
  const std::size_t n = points.size();
  require(n >= 2, Errc::kTooFewPoints, "mhe_energy needs at least two points");
  require(sigma > 0.0, Errc::kInvalidArgument, "sigma must be > 0");
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) sum += 2.0 * std::exp(dot(points.row(i), points.row(j)) / sigma);
  }
  return sum / (static_cast<double>(n) * static_cast<double>(n - 1));
}

LossAndGradient mhe_energy_gradient(PointsView points, double sigma) {
  const std::size_t n = points.size();
  const std::size_t dim = points.dim;
  require(n >= 2, Errc::kTooFewPoints, "mhe_energy needs at least two points");
  require(sigma > 0.0, Errc::kInvalidArgument, "sigma must be > 0");
  const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(n - 1));

  LossAndGradient out;
  out.gradient.assign(n * dim, 0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto si = points.row(i);
    double* gi = out.gradient.data() + i * dim;
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto sj = points.row(j);
      const double k = std::exp(dot(si, sj) / sigma);
      sum += 2.0 * k;
      // Both ordered pairs (i, j) and (j, i) contribute.
      const double c = 2.0 * k / sigma * scale;
      double* gj = out.gradient.data() + j * dim;
      for (std::size_t t = 0; t < dim; ++t) {
        gi[t] += c * sj[t];
        gj[t] += c * si[t];
      }
    }
  }
  out.value = sum * scale;
  return out;
}

CircleFit fit_equidistant(std::span<const double> angles, DeltaVariant variant) {
  CircleFit fit;
  const std::size_t n = angles.size();
  if (n == 0) return fit;
  if (n == 1) {
    fit.offset = wrap_to_circle(angles[0]);
    fit.deviations.assign(1, 0.0);
    return fit;
  }

  std::vector<double> theta(n);
  for (std::size_t i = 0; i < n; ++i) theta[i] = wrap_to_circle(angles[i]);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return theta[a] < theta[b] || (theta[a] == theta[b] && a < b);
  });

  // Sorted angle j is matched with target offset + 2 pi j / n.
  const double spacing = kTwoPi / static_cast<double>(n);
  std::vector<double> rho(n);
  for (std::size_t j = 0; j < n; ++j) {
    rho[j] = wrap_to_circle(theta[order[j]] - spacing * static_cast<double>(j));
  }

  fit.offset = variant == DeltaVariant::kSquared ? least_squares_offset(rho) : least_absolute_offset(rho);
  fit.deviations.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    const double dev = wrap_to_pi(rho[j] - fit.offset);
    fit.deviations[order[j]] = dev;
    fit.value += variant == DeltaVariant::kSquared ? dev * dev : std::abs(dev);
  }
  return fit;
}

double circle_delta(std::span<const double> angles, DeltaVariant variant) {
  return fit_equidistant(angles, variant).value;
}

double sliced_loss(std::span<const Direction> dirs, std::span<const GreatCircle> circles, DeltaVariant variant) {
  const auto flat = flatten(dirs);
  const std::size_t dim = dirs.empty() ? (circles.empty() ? 0 : circles.front().p.dim()) : dirs.front().dim();
  return sliced_loss(PointsView{flat, dim}, circles, variant);
}

double sliced_loss(PointsView points, std::span<const GreatCircle> circles, DeltaVariant variant) {
  require(!circles.empty(), Errc::kInvalidArgument, "sliced_loss needs at least one circle");
  double total = 0.0;
  bool any_kept = false;
  for (const auto& c : circles) {
    const auto proj = project_to_circle(points, c);
    if (proj.angles.empty()) continue;
    any_kept = true;
    total += circle_delta(proj.angles, variant);
  }
  require(any_kept, Errc::kAllPointsDegenerate, "every point is degenerate on every circle");
  return total / static_cast<double>(circles.size());
}

LossAndGradient sliced_loss_gradient(PointsView points, std::span<const GreatCircle> circles,
                                     DeltaVariant variant) {
  require(!circles.empty(), Errc::kInvalidArgument, "sliced_loss needs at least one circle");
  const std::size_t dim = points.dim;
  const double inv_c = 1.0 / static_cast<double>(circles.size());
  LossAndGradient out;
  out.gradient.assign(points.size() * dim, 0.0);
  bool any_kept = false;

  for (const auto& c : circles) {
    const auto proj = project_to_circle(points, c);
    if (proj.angles.empty()) continue;
    any_kept = true;
    const auto fit = fit_equidistant(proj.angles, variant);
    out.value += fit.value;
    const auto p = c.p.coords();
    const auto q = c.q.coords();
    // The offset is optimal, so only the direct dependence on each angle matters;
    // d(theta)/ds = (a q - b p) / (a^2 + b^2).
    for (std::size_t j = 0; j < proj.kept.size(); ++j) {
      const double dev = fit.deviations[j];
      const double w = variant == DeltaVariant::kSquared ? 2.0 * dev : (dev > 0.0) - (dev < 0.0);
      const auto [a, b] = proj.planar[j];
      const double coef = w / (a * a + b * b) * inv_c;
      double* g = out.gradient.data() + proj.kept[j] * dim;
      for (std::size_t t = 0; t < dim; ++t) g[t] += coef * (a * q[t] - b * p[t]);
    }
  }
  require(any_kept, Errc::kAllPointsDegenerate, "every point is degenerate on every circle");
  out.value *= inv_c;
  return out;
}

DispersionResult disperse(const VectorStore& store, const DispersionConfig& cfg) {
  cfg.validate();
  require(!store.empty(), Errc::kEmptyStore, "cannot disperse an empty store");
  const std::size_t n = store.size();
  const std::size_t dim = store.dim();
  require(dim >= 2, Errc::kBadShape, "dispersion needs dim >= 2");

  std::vector<double> dirs(n * dim);
  std::vector<double> norms(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto key = store.key(i);
    norms[i] = norm(key);
    require(norms[i] > kZeroNormEps, Errc::kZeroVector, "store contains a zero key");
    for (std::size_t t = 0; t < dim; ++t) dirs[i * dim + t] = key[t] / norms[i];
  }

  Rng rng(cfg.seed);
  const bool batched = n > cfg.batch_size;
  const std::size_t bsize = batched ? cfg.batch_size : n;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<double> batch(bsize * dim);
  std::vector<GreatCircle> circles;
  std::vector<double> step_dir(dim);

  DispersionResult result;
  result.trace.records.reserve(cfg.steps + 1);

  for (std::size_t step = 0; step <= cfg.steps; ++step) {
    if (batched) {
      // Partial Fisher-Yates: the first bsize entries become a uniform sample.
      for (std::size_t i = 0; i < bsize; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(perm[i], perm[pick(rng)]);
      }
    }
    for (std::size_t b = 0; b < bsize; ++b) {
      std::copy_n(dirs.begin() + static_cast<std::ptrdiff_t>(perm[b] * dim), dim,
                  batch.begin() + static_cast<std::ptrdiff_t>(b * dim));
    }
    const PointsView view{batch, dim};

    LossAndGradient lg;
    if (cfg.regularizer == Regularizer::kSliced) {
      circles.clear();
      for (std::size_t c = 0; c < cfg.circles_per_step; ++c) circles.push_back(sample_great_circle(dim, rng));
      lg = sliced_loss_gradient(view, circles, cfg.delta);
    } else {
      lg = mhe_energy_gradient(view, cfg.sigma);
    }

    result.trace.records.push_back({step, cfg.loss_weight * lg.value, spherical_variance(PointsView{dirs, dim})});
    if (step == cfg.steps) break;

    for (std::size_t b = 0; b < bsize; ++b) {
      const double* s = batch.data() + b * dim;
      const double* g = lg.gradient.data() + b * dim;
      double gs = 0.0;
      for (std::size_t t = 0; t < dim; ++t) gs += g[t] * s[t];
      // Riemannian step: drop the radial component, move, retract onto the sphere.
      double len2 = 0.0;
      for (std::size_t t = 0; t < dim; ++t) {
        const double tangent = cfg.loss_weight * (g[t] - gs * s[t]);
        step_dir[t] = s[t] - cfg.step_size * tangent;
        len2 += step_dir[t] * step_dir[t];
      }
      if (!std::isfinite(len2)) {
        fail(Errc::kNonFiniteGradient, "non-finite gradient at step " + std::to_string(step));
      }
      const double inv = 1.0 / std::sqrt(len2);
      double* out = dirs.data() + perm[b] * dim;
      for (std::size_t t = 0; t < dim; ++t) out[t] = step_dir[t] * inv;
    }
  }

  std::vector<double> keys(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t t = 0; t < dim; ++t) keys[i * dim + t] = dirs[i * dim + t] * norms[i];
  }
  if (cfg.steps == 0) {
    result.store = store;
  } else {
    result.store = VectorStore(dim, std::move(keys), {store.labels().begin(), store.labels().end()});
  }
  return result;
}

RegularizerComparison compare_regularizers(const VectorStore& store, const DispersionConfig& mhe_cfg,
                                           const DispersionConfig& sliced_cfg) {
  require(mhe_cfg.regularizer == Regularizer::kMhe, Errc::kInvalidArgument, "first config must use MHE");
  require(sliced_cfg.regularizer == Regularizer::kSliced, Errc::kInvalidArgument,
          "second config must use sliced dispersion");
  require(mhe_cfg.steps == sliced_cfg.steps && mhe_cfg.seed == sliced_cfg.seed, Errc::kInvalidArgument,
          "compared configs must share steps and seed");
  return {disperse(store, mhe_cfg).trace, disperse(store, sliced_cfg).trace};
}

void write_trace_csv(std::ostream& out, const DispersionTrace& trace) {
  out << "step,loss,spherical_variance\n" << std::setprecision(17);
  for (const auto& r : trace.records) out << r.step << ',' << r.loss << ',' << r.spherical_variance << '\n';
}

}  // namespace dknn
