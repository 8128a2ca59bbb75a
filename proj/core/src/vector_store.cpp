#include "dknn/vector_store.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "binary_io.hpp"
#include "dknn/error.hpp"

namespace dknn {

VectorStore::VectorStore(std::size_t dim) : dim_(dim) {
  require(dim >= 1, Errc::kBadShape, "store dimension must be >= 1");
}

VectorStore::VectorStore(std::size_t dim, std::vector<double> keys, std::vector<std::uint32_t> labels)
    : dim_(dim), keys_(std::move(keys)), labels_(std::move(labels)) {
  require(dim >= 1, Errc::kBadShape, "store dimension must be >= 1");
  require(keys_.size() == labels_.size() * dim_, Errc::kLengthMismatch, "keys and labels disagree on count");
}

void VectorStore::reserve(std::size_t n) {
  keys_.reserve(n * dim_);
  labels_.reserve(n);
}

void VectorStore::push_back(std::span<const double> key, std::uint32_t label) {
  require(key.size() == dim_, Errc::kBadShape, "key dimension mismatch");
  keys_.insert(keys_.end(), key.begin(), key.end());
  labels_.push_back(label);
}

void write_store(const VectorStore& store, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::kIo, "cannot open " + path.string() + " for writing");
  out.write("DKNN", 4);
  detail::write_pod<std::uint32_t>(out, kStoreFormatVersion);
  detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(store.dim()));
  detail::write_pod<std::uint64_t>(out, store.size());
  std::vector<float> keys(store.keys().begin(), store.keys().end());
  detail::write_span<float>(out, keys);
  detail::write_span<std::uint32_t>(out, store.labels());
  if (!out) fail(Errc::kIo, "write failed for " + path.string());
}

VectorStore read_store(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::kIo, "cannot open " + path.string());
  detail::expect_magic(in, "DKNN");
  const auto version = detail::read_pod<std::uint32_t>(in);
  if (version != kStoreFormatVersion) fail(Errc::kFormat, "unsupported store version");
  const auto dim = detail::read_pod<std::uint32_t>(in);
  const auto count = detail::read_pod<std::uint64_t>(in);
  if (dim == 0) fail(Errc::kFormat, "zero dimension");
  if (count > std::numeric_limits<std::size_t>::max() / dim / sizeof(float)) fail(Errc::kFormat, "count too large");
  std::vector<float> keys(count * dim);
  detail::read_span<float>(in, keys);
  std::vector<std::uint32_t> labels(count);
  detail::read_span<std::uint32_t>(in, labels);
  for (float v : keys) {
    if (!std::isfinite(v)) fail(Errc::kFormat, "non-finite key coordinate");
  }
  return VectorStore(dim, std::vector<double>(keys.begin(), keys.end()), std::move(labels));
}

}  // namespace dknn
