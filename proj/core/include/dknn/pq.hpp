#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dknn/geometry.hpp"
#include "dknn/vector_store.hpp"

namespace dknn {

/// Product quantizer: `m` sub-spaces with 2^bits codewords each.
struct PqCodebooks {
  std::size_t dim = 0;
  std::size_t m = 0;
  std::size_t bits = 0;
  std::vector<float> codewords;  // m * ksub * dsub

  std::size_t ksub() const noexcept { return std::size_t{1} << bits; }
  std::size_t dsub() const noexcept { return m == 0 ? 0 : dim / m; }
  std::span<const float> codeword(std::size_t sub, std::size_t l) const noexcept {
    return {codewords.data() + (sub * ksub() + l) * dsub(), dsub()};
  }
};

PqCodebooks pq_train(PointsView residuals, std::size_t m, std::size_t bits, std::uint64_t seed,
                     std::size_t max_iters = 25);

std::vector<std::uint8_t> pq_encode(const PqCodebooks& cb, std::span<const double> r);
void pq_encode_into(const PqCodebooks& cb, std::span<const double> r, std::span<std::uint8_t> out);
Vector pq_decode(const PqCodebooks& cb, std::span<const std::uint8_t> code);

/// table[sub * ksub + l] = squared distance between sub-vector `sub` of the query
/// residual and codeword l.
std::vector<double> adc_table(const PqCodebooks& cb, std::span<const double> q_residual);
double adc_distance(const PqCodebooks& cb, std::span<const double> table,
                    std::span<const std::uint8_t> code) noexcept;

}  // namespace dknn
