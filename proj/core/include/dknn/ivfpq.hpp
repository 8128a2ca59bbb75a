#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "dknn/kmeans.hpp"
#include "dknn/pq.hpp"
#include "dknn/vector_store.hpp"

namespace dknn {

struct Hit {
  std::uint64_t key_id = 0;
  double distance = 0.0;  // squared Euclidean (approximate under PQ)
  std::uint32_t label = 0;

  friend bool operator==(const Hit&, const Hit&) = default;
};

/// Hits in nondecreasing distance order, ties broken by lower key id.
struct QueryResult {
  std::vector<Hit> hits;
};

struct BuildConfig {
  std::size_t centroids = 2048;
  std::size_t pq_m = 8;
  std::size_t pq_bits = 8;
  std::size_t train_sample = 1'000'000;
  std::size_t kmeans_iters = 25;
  std::uint64_t seed = 0;
  // Keeps exact residuals instead of PQ codes. Only meant for oracle tests.
  bool raw_residuals = false;
};

inline constexpr std::size_t kDefaultNprobe = 32;

struct InvertedList {
  std::vector<std::uint64_t> ids;
  std::vector<std::uint8_t> codes;  // ids.size() * m
  std::vector<double> residuals;    // ids.size() * dim, raw-residual mode only
};

class IvfPqIndex {
 public:
  IvfPqIndex() = default;

  /// Validates and takes ownership of the parts of a trained index.
  IvfPqIndex(std::size_t dim, std::vector<float> centroids, PqCodebooks codebooks,
             std::vector<InvertedList> lists, std::vector<std::uint32_t> labels, bool raw_residuals);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t nlist() const noexcept { return lists_.size(); }
  std::size_t size() const noexcept { return labels_.size(); }
  bool raw_residuals() const noexcept { return raw_; }

  std::span<const float> centroids() const noexcept { return centroids_; }
  std::span<const float> centroid(std::size_t c) const noexcept {
    return {centroids_.data() + c * dim_, dim_};
  }
  const PqCodebooks& codebooks() const noexcept { return codebooks_; }
  const std::vector<InvertedList>& lists() const noexcept { return lists_; }
  std::span<const std::uint32_t> labels() const noexcept { return labels_; }

  /// Inverted list holding `key_id`.
  std::uint32_t list_of(std::uint64_t key_id) const { return key_list_.at(key_id); }
  std::span<const std::uint32_t> key_lists() const noexcept { return key_list_; }

  /// Centroid ids sorted by squared distance to h, ties by lower id.
  std::vector<std::uint32_t> rank_centroids(std::span<const double> h) const;

  /// Approximate key as centroid + decoded residual.
  Vector reconstruct(std::uint64_t key_id) const;

  QueryResult search(std::span<const double> q, std::size_t k, std::size_t nprobe) const;

  void save(std::ostream& out) const;
  void save(const std::filesystem::path& path) const;
  static IvfPqIndex load(std::istream& in);
  static IvfPqIndex load(const std::filesystem::path& path);

 private:
  void finalize();

  std::size_t dim_ = 0;
  std::vector<float> centroids_;
  PqCodebooks codebooks_;
  std::vector<InvertedList> lists_;
  std::vector<std::uint32_t> labels_;
  bool raw_ = false;

  // Derived on construction.
  std::vector<std::uint32_t> key_list_;
  std::vector<std::uint64_t> key_pos_;
  // |r|^2 + 2<c, r> per (list, sub-space, codeword); lets a probe build its
  // distance table with one add per entry.
  std::vector<float> list_terms_;
};

// Index file (little-endian): "DIVF", version u32, dim u32, K u32, M u32, bits u32,
// N u64, centroids f32[K*dim], codebooks f32[M*L*dim/M], then per list: length u64,
// key ids u64[length], codes u8[length*M]; finally labels u32[N].
inline constexpr std::uint32_t kIndexFormatVersion = 1;

IvfPqIndex build_index(const VectorStore& store, const BuildConfig& cfg);

QueryResult search(const IvfPqIndex& index, std::span<const double> q, std::size_t k, std::size_t nprobe);
/// Independent per-query searches; result order matches query order.
std::vector<QueryResult> search_batch(const IvfPqIndex& index, PointsView queries, std::size_t k,
                                      std::size_t nprobe);

/// Full linear scan with exact squared Euclidean distances.
QueryResult exact_search(const VectorStore& store, std::span<const double> q, std::size_t k);

/// Fraction of the exact top-k ids present in the approximate result.
double recall_at_k(const QueryResult& approx, const QueryResult& exact);

}  // namespace dknn
