#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dknn/ivfpq.hpp"
#include "dknn/vector_store.hpp"

namespace dknn {

/// Probability vector over token ids 0..size()-1.
class Distribution {
 public:
  Distribution() = default;
  /// Throws kInvalidArgument unless all entries are >= 0 and sum to 1 within 1e-9.
  explicit Distribution(std::vector<double> probs);

  std::size_t size() const noexcept { return probs_.size(); }
  double operator[](std::size_t i) const noexcept { return probs_[i]; }
  std::span<const double> probs() const noexcept { return probs_; }
  std::size_t argmax() const noexcept;

 private:
  std::vector<double> probs_;
};

struct InterpConfig {
  std::size_t k = 8;
  double temperature = 100.0;
  double lambda = 0.3;
  std::size_t nprobe = 32;
  // Rescore retrieved neighbours with exact distances from the store.
  bool exact_distances = false;

  void validate() const;
};

/// p(y) proportional to the sum over hits labelled y of exp(-d / T), where d is the
/// stored squared distance.
Distribution knn_distribution(const QueryResult& hits, double temperature, std::size_t vocab_size);

/// (1 - lambda) * p_model + lambda * p_knn.
Distribution interpolate(const Distribution& p_model, const Distribution& p_knn, double lambda);

Distribution step_predict(const IvfPqIndex& index, const VectorStore& store, std::span<const double> h,
                          const Distribution& p_model, const InterpConfig& cfg);

}  // namespace dknn
