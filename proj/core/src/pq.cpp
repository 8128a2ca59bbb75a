#include "dknn/pq.hpp"

#include <algorithm>
#include <limits>

#include "dknn/error.hpp"
#include "dknn/kmeans.hpp"
#include "dknn/rng.hpp"

namespace dknn {

namespace {

double sub_distance(std::span<const double> x, std::span<const float> c) noexcept {
  double s = 0.0;
  for (std::size_t t = 0; t < c.size(); ++t) {
    const double d = x[t] - static_cast<double>(c[t]);
    s += d * d;
  }
  return s;
}

void check_codebooks(const PqCodebooks& cb, std::size_t dim) {
  require(cb.m > 0 && cb.dim == dim, Errc::kBadShape, "vector does not match codebook dimension");
}

}  // namespace

PqCodebooks pq_train(PointsView residuals, std::size_t m, std::size_t bits, std::uint64_t seed,
                     std::size_t max_iters) {
  const std::size_t dim = residuals.dim;
  require(m >= 1 && dim % m == 0, Errc::kBadShape, "dimension must be divisible by the number of sub-spaces");
  require(bits >= 1 && bits <= 8, Errc::kInvalidArgument, "bits must be in [1, 8]");
  PqCodebooks cb;
  cb.dim = dim;
  cb.m = m;
  cb.bits = bits;
  const std::size_t ksub = cb.ksub();
  const std::size_t dsub = cb.dsub();
  const std::size_t n = residuals.size();
  require(n >= ksub, Errc::kInsufficientData, "fewer training residuals than codewords");

  cb.codewords.resize(m * ksub * dsub);
  std::vector<double> sub(n * dsub);
  for (std::size_t s = 0; s < m; ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = residuals.row(i);
      std::copy_n(row.begin() + static_cast<std::ptrdiff_t>(s * dsub), dsub,
                  sub.begin() + static_cast<std::ptrdiff_t>(i * dsub));
    }
    const auto model = kmeans_train(PointsView{sub, dsub}, ksub, max_iters, derive_seed(seed, s));
    for (std::size_t j = 0; j < ksub * dsub; ++j) {
      cb.codewords[s * ksub * dsub + j] = static_cast<float>(model.centroids[j]);
    }
  }
  return cb;
}

void pq_encode_into(const PqCodebooks& cb, std::span<const double> r, std::span<std::uint8_t> out) {
  const std::size_t dsub = cb.dsub();
  for (std::size_t s = 0; s < cb.m; ++s) {
    const auto x = r.subspan(s * dsub, dsub);
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_l = 0;
    for (std::size_t l = 0; l < cb.ksub(); ++l) {
      const double d = sub_distance(x, cb.codeword(s, l));
      if (d < best) {
        best = d;
        best_l = l;
      }
    }
    out[s] = static_cast<std::uint8_t>(best_l);
  }
}

std::vector<std::uint8_t> pq_encode(const PqCodebooks& cb, std::span<const double> r) {
  check_codebooks(cb, r.size());
  std::vector<std::uint8_t> code(cb.m);
  pq_encode_into(cb, r, code);
  return code;
}

Vector pq_decode(const PqCodebooks& cb, std::span<const std::uint8_t> code) {
  require(code.size() == cb.m, Errc::kBadShape, "code length must equal the number of sub-spaces");
  Vector out(cb.dim);
  const std::size_t dsub = cb.dsub();
  for (std::size_t s = 0; s < cb.m; ++s) {
    const auto c = cb.codeword(s, code[s]);
    for (std::size_t t = 0; t < dsub; ++t) out[s * dsub + t] = c[t];
  }
  return out;
}

std::vector<double> adc_table(const PqCodebooks& cb, std::span<const double> q_residual) {
  check_codebooks(cb, q_residual.size());
  const std::size_t dsub = cb.dsub();
  std::vector<double> table(cb.m * cb.ksub());
  for (std::size_t s = 0; s < cb.m; ++s) {
    const auto x = q_residual.subspan(s * dsub, dsub);
    for (std::size_t l = 0; l < cb.ksub(); ++l) table[s * cb.ksub() + l] = sub_distance(x, cb.codeword(s, l));
  }
  return table;
}

double adc_distance(const PqCodebooks& cb, std::span<const double> table,
                    std::span<const std::uint8_t> code) noexcept {
  double d = 0.0;
  for (std::size_t s = 0; s < cb.m; ++s) d += table[s * cb.ksub() + code[s]];
  return d;
}

}  // namespace dknn
