#include "dknn/knn_interp.hpp"

#include <algorithm>
#include <cmath>

#include "dknn/error.hpp"
#include "dknn/geometry.hpp"

namespace dknn {

Distribution::Distribution(std::vector<double> probs) : probs_(std::move(probs)) {
  require(!probs_.empty(), Errc::kInvalidArgument, "empty distribution");
  double sum = 0.0;
  for (double p : probs_) {
    require(std::isfinite(p) && p >= 0.0, Errc::kInvalidArgument, "probabilities must be finite and >= 0");
    sum += p;
  }
  require(std::abs(sum - 1.0) <= 1e-9, Errc::kInvalidArgument, "probabilities must sum to 1");
}

std::size_t Distribution::argmax() const noexcept {
  return static_cast<std::size_t>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
}

void InterpConfig::validate() const {
  require(k >= 1, Errc::kInvalidArgument, "k must be >= 1");
  require(temperature > 0.0 && std::isfinite(temperature), Errc::kInvalidArgument, "temperature must be > 0");
  require(lambda >= 0.0 && lambda <= 1.0, Errc::kInvalidArgument, "lambda must be in [0, 1]");
  require(nprobe >= 1, Errc::kInvalidArgument, "nprobe must be >= 1");
}

Distribution knn_distribution(const QueryResult& hits, double temperature, std::size_t vocab_size) {
  require(!hits.hits.empty(), Errc::kEmptyHits, "no neighbours to vote");
  require(temperature > 0.0, Errc::kInvalidArgument, "temperature must be > 0");
  require(vocab_size >= 1, Errc::kInvalidArgument, "vocabulary must be non-empty");
  double dmin = hits.hits.front().distance;
  for (const auto& h : hits.hits) dmin = std::min(dmin, h.distance);

  // Shifting by the smallest distance leaves the normalized result unchanged and
  // keeps at least one weight at exactly 1.
  std::vector<double> p(vocab_size, 0.0);
  for (const auto& h : hits.hits) {
    require(h.label < vocab_size, Errc::kInvalidArgument, "neighbour label outside the vocabulary");
    p[h.label] += std::exp(-(h.distance - dmin) / temperature);
  }
  double sum = 0.0;
  for (double v : p) sum += v;
  for (double& v : p) v /= sum;
  return Distribution(std::move(p));
}

Distribution interpolate(const Distribution& p_model, const Distribution& p_knn, double lambda) {
  require(p_model.size() == p_knn.size(), Errc::kSizeMismatch, "distributions cover different vocabularies");
  require(lambda >= 0.0 && lambda <= 1.0, Errc::kInvalidArgument, "lambda must be in [0, 1]");
  std::vector<double> out(p_model.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - lambda) * p_model[i] + lambda * p_knn[i];
  return Distribution(std::move(out));
}

Distribution step_predict(const IvfPqIndex& index, const VectorStore& store, std::span<const double> h,
                          const Distribution& p_model, const InterpConfig& cfg) {
  cfg.validate();
  if (cfg.lambda == 0.0) return p_model;
  auto hits = index.search(h, cfg.k, std::min(cfg.nprobe, index.nlist()));
  if (cfg.exact_distances) {
    require(store.size() == index.size(), Errc::kSizeMismatch, "store does not match the index");
    for (auto& hit : hits.hits) hit.distance = squared_distance(h, store.key(hit.key_id));
    std::sort(hits.hits.begin(), hits.hits.end(), [](const Hit& a, const Hit& b) {
      return a.distance < b.distance || (a.distance == b.distance && a.key_id < b.key_id);
    });
  }
  return interpolate(p_model, knn_distribution(hits, cfg.temperature, p_model.size()), cfg.lambda);
}

}  // namespace dknn
