#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace dknn {

/// Row-major read-only view over `size()` points of dimension `dim`.
struct PointsView {
  std::span<const double> data;
  std::size_t dim = 0;

  std::size_t size() const noexcept { return dim == 0 ? 0 : data.size() / dim; }
  std::span<const double> row(std::size_t i) const noexcept { return data.subspan(i * dim, dim); }
};

/// The datastore: an ordered collection of keys, each tagged with one integer label.
///
/// Keys are kept in double precision in memory; the on-disk format stores f32.
class VectorStore {
 public:
  VectorStore() = default;
  explicit VectorStore(std::size_t dim);
  VectorStore(std::size_t dim, std::vector<double> keys, std::vector<std::uint32_t> labels);

  void reserve(std::size_t n);
  void push_back(std::span<const double> key, std::uint32_t label);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return labels_.size(); }
  bool empty() const noexcept { return labels_.empty(); }

  std::span<const double> key(std::size_t i) const noexcept {
    return {keys_.data() + i * dim_, dim_};
  }
  std::span<double> mutable_key(std::size_t i) noexcept { return {keys_.data() + i * dim_, dim_}; }
  std::uint32_t label(std::size_t i) const noexcept { return labels_[i]; }

  std::span<const double> keys() const noexcept { return keys_; }
  std::span<const std::uint32_t> labels() const noexcept { return labels_; }
  PointsView view() const noexcept { return {keys_, dim_}; }

  friend bool operator==(const VectorStore&, const VectorStore&) = default;

 private:
  std::size_t dim_ = 0;
  std::vector<double> keys_;
  std::vector<std::uint32_t> labels_;
};

// Binary layout (little-endian): "DKNN", version u32, dim u32, count u64,
// keys f32[count * dim] row-major, labels u32[count].
inline constexpr std::uint32_t kStoreFormatVersion = 1;

void write_store(const VectorStore& store, const std::filesystem::path& path);
VectorStore read_store(const std::filesystem::path& path);

}  // namespace dknn
