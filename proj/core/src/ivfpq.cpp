#include "dknn/ivfpq.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "binary_io.hpp"
#include "dknn/error.hpp"
#include "dknn/geometry.hpp"
#include "dknn/rng.hpp"

namespace dknn {

namespace {

bool hit_less(const Hit& a, const Hit& b) noexcept {
  return a.distance < b.distance || (a.distance == b.distance && a.key_id < b.key_id);
}

// Bounded max-heap keeping the k smallest hits under hit_less.
class TopK {
 public:
  explicit TopK(std::size_t k) : k_(k) { heap_.reserve(k); }

  void push(std::uint64_t id, double distance) {
    const Hit h{id, distance, 0};
    if (heap_.size() < k_) {
      heap_.push_back(h);
      std::push_heap(heap_.begin(), heap_.end(), hit_less);
    } else if (hit_less(h, heap_.front())) {
      std::pop_heap(heap_.begin(), heap_.end(), hit_less);
      heap_.back() = h;
      std::push_heap(heap_.begin(), heap_.end(), hit_less);
    }
  }

  // Cheap pre-filter for the hot loop.
  double worst() const noexcept {
    return heap_.size() < k_ ? std::numeric_limits<double>::infinity() : heap_.front().distance;
  }

  std::vector<Hit> sorted() && {
    std::sort_heap(heap_.begin(), heap_.end(), hit_less);
    return std::move(heap_);
  }

 private:
  std::size_t k_;
  std::vector<Hit> heap_;
};

double centroid_distance(std::span<const double> q, std::span<const float> c) noexcept {
  double s = 0.0;
  for (std::size_t t = 0; t < c.size(); ++t) {
    const double d = q[t] - static_cast<double>(c[t]);
    s += d * d;
  }
  return s;
}

}  // namespace

IvfPqIndex::IvfPqIndex(std::size_t dim, std::vector<float> centroids, PqCodebooks codebooks,
                       std::vector<InvertedList> lists, std::vector<std::uint32_t> labels, bool raw_residuals)
    : dim_(dim),
      centroids_(std::move(centroids)),
      codebooks_(std::move(codebooks)),
      lists_(std::move(lists)),
      labels_(std::move(labels)),
      raw_(raw_residuals) {
  require(dim_ >= 1, Errc::kBadShape, "index dimension must be >= 1");
  require(!lists_.empty() && centroids_.size() == lists_.size() * dim_, Errc::kBadShape,
          "centroid table does not match list count");
  if (!raw_) {
    require(codebooks_.dim == dim_ && codebooks_.m >= 1 && dim_ % codebooks_.m == 0, Errc::kBadShape,
            "codebooks do not match index dimension");
    require(codebooks_.bits >= 1 && codebooks_.bits <= 8, Errc::kFormat, "bits must be in [1, 8]");
    require(codebooks_.codewords.size() == codebooks_.m * codebooks_.ksub() * codebooks_.dsub(), Errc::kBadShape,
            "codebook size mismatch");
  }
  finalize();
}

void IvfPqIndex::finalize() {
  const std::size_t n = labels_.size();
  constexpr auto kUnset = std::numeric_limits<std::uint32_t>::max();
  key_list_.assign(n, kUnset);
  key_pos_.assign(n, 0);
  std::size_t total = 0;
  for (std::size_t c = 0; c < lists_.size(); ++c) {
    const auto& list = lists_[c];
    if (raw_) {
      require(list.residuals.size() == list.ids.size() * dim_, Errc::kBadShape, "residual block size mismatch");
    } else {
      require(list.codes.size() == list.ids.size() * codebooks_.m, Errc::kBadShape, "code block size mismatch");
    }
    for (std::size_t j = 0; j < list.ids.size(); ++j) {
      const auto id = list.ids[j];
      require(id < n, Errc::kFormat, "key id out of range");
      require(key_list_[id] == kUnset, Errc::kFormat, "key id stored in more than one list");
      key_list_[id] = static_cast<std::uint32_t>(c);
      key_pos_[id] = j;
    }
    total += list.ids.size();
  }
  require(total == n, Errc::kFormat, "inverted lists do not cover every key");

  list_terms_.clear();
  if (raw_) return;
  const std::size_t m = codebooks_.m;
  const std::size_t ksub = codebooks_.ksub();
  const std::size_t dsub = codebooks_.dsub();
  list_terms_.resize(lists_.size() * m * ksub);
  for (std::size_t c = 0; c < lists_.size(); ++c) {
    const auto cen = centroid(c);
    for (std::size_t s = 0; s < m; ++s) {
      for (std::size_t l = 0; l < ksub; ++l) {
        const auto r = codebooks_.codeword(s, l);
        double rr = 0.0;
        double cr = 0.0;
        for (std::size_t t = 0; t < dsub; ++t) {
          rr += static_cast<double>(r[t]) * r[t];
          cr += static_cast<double>(cen[s * dsub + t]) * r[t];
        }
        list_terms_[(c * m + s) * ksub + l] = static_cast<float>(rr + 2.0 * cr);
      }
    }
  }
}

std::vector<std::uint32_t> IvfPqIndex::rank_centroids(std::span<const double> h) const {
  require(h.size() == dim_, Errc::kBadShape, "query dimension mismatch");
  const std::size_t k = nlist();
  std::vector<double> dist(k);
  for (std::size_t c = 0; c < k; ++c) dist[c] = centroid_distance(h, centroid(c));
  std::vector<std::uint32_t> order(k);
  std::iota(order.begin(), order.end(), 0U);
  std::sort(order.begin(), order.end(),
            [&](std::uint32_t a, std::uint32_t b) { return dist[a] < dist[b] || (dist[a] == dist[b] && a < b); });
  return order;
}

Vector IvfPqIndex::reconstruct(std::uint64_t key_id) const {
  require(key_id < size(), Errc::kInvalidArgument, "key id out of range");
  const auto c = key_list_[key_id];
  const auto pos = key_pos_[key_id];
  const auto& list = lists_[c];
  Vector out(dim_);
  if (raw_) {
    for (std::size_t t = 0; t < dim_; ++t) out[t] = centroid(c)[t] + list.residuals[pos * dim_ + t];
  } else {
    const auto r = pq_decode(codebooks_, {list.codes.data() + pos * codebooks_.m, codebooks_.m});
    for (std::size_t t = 0; t < dim_; ++t) out[t] = centroid(c)[t] + r[t];
  }
  return out;
}

QueryResult IvfPqIndex::search(std::span<const double> q, std::size_t k, std::size_t nprobe) const {
  require(size() > 0, Errc::kEmptyIndex, "search on an empty index");
  require(k >= 1, Errc::kInvalidArgument, "k must be >= 1");
  require(nprobe >= 1 && nprobe <= nlist(), Errc::kInvalidArgument, "nprobe must be in [1, K]");
  require(q.size() == dim_, Errc::kBadShape, "query dimension mismatch");

  const std::size_t nl = nlist();
  std::vector<std::pair<double, std::uint32_t>> cdist(nl);
  for (std::size_t c = 0; c < nl; ++c) cdist[c] = {centroid_distance(q, centroid(c)), static_cast<std::uint32_t>(c)};
  std::partial_sort(cdist.begin(), cdist.begin() + static_cast<std::ptrdiff_t>(nprobe), cdist.end());

  TopK top(k);
  if (raw_) {
    std::vector<double> qc(dim_);
    for (std::size_t p = 0; p < nprobe; ++p) {
      const auto c = cdist[p].second;
      const auto cen = centroid(c);
      for (std::size_t t = 0; t < dim_; ++t) qc[t] = q[t] - static_cast<double>(cen[t]);
      const auto& list = lists_[c];
      for (std::size_t j = 0; j < list.ids.size(); ++j) {
        top.push(list.ids[j], squared_distance(qc, {list.residuals.data() + j * dim_, dim_}));
      }
    }
  } else {
    const std::size_t m = codebooks_.m;
    const std::size_t ksub = codebooks_.ksub();
    const std::size_t dsub = codebooks_.dsub();
    // <q_s, r_sl> once per query; each probe then needs one add per table entry.
    std::vector<float> qr(m * ksub);
    for (std::size_t s = 0; s < m; ++s) {
      for (std::size_t l = 0; l < ksub; ++l) {
        const auto r = codebooks_.codeword(s, l);
        double acc = 0.0;
        for (std::size_t t = 0; t < dsub; ++t) acc += q[s * dsub + t] * static_cast<double>(r[t]);
        qr[s * ksub + l] = static_cast<float>(acc);
      }
    }
    std::vector<float> table(m * ksub);
    for (std::size_t p = 0; p < nprobe; ++p) {
      const auto c = cdist[p].second;
      const auto& list = lists_[c];
      if (list.ids.empty()) continue;
      const float* terms = list_terms_.data() + c * m * ksub;
      for (std::size_t e = 0; e < m * ksub; ++e) table[e] = terms[e] - 2.0F * qr[e];
      const auto base = static_cast<float>(cdist[p].first);
      const std::uint8_t* code = list.codes.data();
      for (std::size_t j = 0; j < list.ids.size(); ++j, code += m) {
        float d = base;
        for (std::size_t s = 0; s < m; ++s) d += table[s * ksub + code[s]];
        if (d <= top.worst()) top.push(list.ids[j], static_cast<double>(d));
      }
    }
  }

  QueryResult result;
  result.hits = std::move(top).sorted();
  for (auto& h : result.hits) h.label = labels_[h.key_id];
  return result;
}

void IvfPqIndex::save(std::ostream& out) const {
  require(!raw_, Errc::kInvalidArgument, "raw-residual indexes are test-only and cannot be saved");
  out.write("DIVF", 4);
  detail::write_pod<std::uint32_t>(out, kIndexFormatVersion);
  detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(dim_));
  detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(nlist()));
  detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(codebooks_.m));
  detail::write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(codebooks_.bits));
  detail::write_pod<std::uint64_t>(out, size());
  detail::write_span<float>(out, centroids_);
  detail::write_span<float>(out, codebooks_.codewords);
  for (const auto& list : lists_) {
    detail::write_pod<std::uint64_t>(out, list.ids.size());
    detail::write_span<std::uint64_t>(out, list.ids);
    detail::write_span<std::uint8_t>(out, list.codes);
  }
  detail::write_span<std::uint32_t>(out, labels_);
  if (!out) fail(Errc::kIo, "index write failed");
}

void IvfPqIndex::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(Errc::kIo, "cannot open " + path.string() + " for writing");
  save(out);
}

IvfPqIndex IvfPqIndex::load(std::istream& in) {
  detail::expect_magic(in, "DIVF");
  if (detail::read_pod<std::uint32_t>(in) != kIndexFormatVersion) fail(Errc::kFormat, "unsupported index version");
  const std::size_t dim = detail::read_pod<std::uint32_t>(in);
  const std::size_t nlist = detail::read_pod<std::uint32_t>(in);
  const std::size_t m = detail::read_pod<std::uint32_t>(in);
  const std::size_t bits = detail::read_pod<std::uint32_t>(in);
  const std::uint64_t n = detail::read_pod<std::uint64_t>(in);
  require(dim >= 1 && nlist >= 1 && m >= 1 && dim % m == 0, Errc::kFormat, "bad index header");
  require(bits >= 1 && bits <= 8, Errc::kFormat, "bits must be in [1, 8]");

  std::vector<float> centroids(nlist * dim);
  detail::read_span<float>(in, centroids);
  PqCodebooks cb;
  cb.dim = dim;
  cb.m = m;
  cb.bits = bits;
  cb.codewords.resize(m * cb.ksub() * cb.dsub());
  detail::read_span<float>(in, cb.codewords);

  std::vector<InvertedList> lists(nlist);
  std::uint64_t total = 0;
  for (auto& list : lists) {
    const auto len = detail::read_pod<std::uint64_t>(in);
    total += len;
    require(total <= n, Errc::kFormat, "list lengths exceed key count");
    list.ids.resize(len);
    detail::read_span<std::uint64_t>(in, list.ids);
    list.codes.resize(len * m);
    detail::read_span<std::uint8_t>(in, list.codes);
  }
  std::vector<std::uint32_t> labels(n);
  detail::read_span<std::uint32_t>(in, labels);
  return IvfPqIndex(dim, std::move(centroids), std::move(cb), std::move(lists), std::move(labels), false);
}

IvfPqIndex IvfPqIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::kIo, "cannot open " + path.string());
  return load(in);
}

IvfPqIndex build_index(const VectorStore& store, const BuildConfig& cfg) {
  require(!store.empty(), Errc::kInsufficientData, "cannot build an index over an empty store");
  require(cfg.centroids >= 1, Errc::kInvalidArgument, "need at least one centroid");
  require(cfg.train_sample >= 1, Errc::kInvalidArgument, "train_sample must be >= 1");
  const std::size_t dim = store.dim();
  const std::size_t n = store.size();
  if (!cfg.raw_residuals) {
    require(cfg.pq_m >= 1 && dim % cfg.pq_m == 0, Errc::kBadShape,
            "dimension must be divisible by the number of sub-spaces");
    require(cfg.pq_bits >= 1 && cfg.pq_bits <= 8, Errc::kInvalidArgument, "pq bits must be in [1, 8]");
  }

  // Uniform training sample without replacement; everything when the store is small.
  const std::size_t sample_size = std::min(cfg.train_sample, n);
  require(sample_size >= cfg.centroids, Errc::kInsufficientData, "training sample smaller than K");
  std::vector<std::size_t> sample(n);
  std::iota(sample.begin(), sample.end(), 0);
  if (sample_size < n) {
    Rng rng(derive_seed(cfg.seed, 0));
    for (std::size_t i = 0; i < sample_size; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(sample[i], sample[pick(rng)]);
    }
    sample.resize(sample_size);
    std::sort(sample.begin(), sample.end());
  }
  std::vector<double> train;
  const double* train_data = store.keys().data();
  if (sample_size < n) {
    train.reserve(sample_size * dim);
    for (auto i : sample) train.insert(train.end(), store.key(i).begin(), store.key(i).end());
    train_data = train.data();
  }
  const PointsView train_view{{train_data, sample_size * dim}, dim};

  const auto coarse = kmeans_train(train_view, cfg.centroids, cfg.kmeans_iters, derive_seed(cfg.seed, 1));
  std::vector<float> centroids(coarse.centroids.begin(), coarse.centroids.end());
  const std::vector<double> rounded(centroids.begin(), centroids.end());
  const PointsView cview{rounded, dim};
  const auto assignment = assign_all(cview, store.view());

  PqCodebooks cb;
  if (!cfg.raw_residuals) {
    std::vector<double> residuals(sample_size * dim);
    for (std::size_t j = 0; j < sample_size; ++j) {
      const std::size_t i = sample[j];
      const auto key = store.key(i);
      const auto cen = cview.row(assignment[i]);
      for (std::size_t t = 0; t < dim; ++t) residuals[j * dim + t] = key[t] - cen[t];
    }
    cb = pq_train(PointsView{residuals, dim}, cfg.pq_m, cfg.pq_bits, derive_seed(cfg.seed, 2), cfg.kmeans_iters);
  }

  std::vector<InvertedList> lists(cfg.centroids);
  std::vector<double> r(dim);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = assignment[i];
    const auto key = store.key(i);
    const auto cen = cview.row(c);
    for (std::size_t t = 0; t < dim; ++t) r[t] = key[t] - cen[t];
    auto& list = lists[c];
    list.ids.push_back(i);
    if (cfg.raw_residuals) {
      list.residuals.insert(list.residuals.end(), r.begin(), r.end());
    } else {
      const std::size_t off = list.codes.size();
      list.codes.resize(off + cb.m);
      pq_encode_into(cb, r, {list.codes.data() + off, cb.m});
    }
  }
  return IvfPqIndex(dim, std::move(centroids), std::move(cb), std::move(lists),
                    {store.labels().begin(), store.labels().end()}, cfg.raw_residuals);
}

QueryResult search(const IvfPqIndex& index, std::span<const double> q, std::size_t k, std::size_t nprobe) {
  return index.search(q, k, nprobe);
}

std::vector<QueryResult> search_batch(const IvfPqIndex& index, PointsView queries, std::size_t k,
                                      std::size_t nprobe) {
  std::vector<QueryResult> out;
  out.reserve(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) out.push_back(index.search(queries.row(i), k, nprobe));
  return out;
}

QueryResult exact_search(const VectorStore& store, std::span<const double> q, std::size_t k) {
  require(!store.empty(), Errc::kEmptyStore, "exact_search on an empty store");
  require(k >= 1, Errc::kInvalidArgument, "k must be >= 1");
  require(q.size() == store.dim(), Errc::kBadShape, "query dimension mismatch");
  TopK top(k);
  for (std::size_t i = 0; i < store.size(); ++i) top.push(i, squared_distance(q, store.key(i)));
  QueryResult result;
  result.hits = std::move(top).sorted();
  for (auto& h : result.hits) h.label = store.label(h.key_id);
  return result;
}

double recall_at_k(const QueryResult& approx, const QueryResult& exact) {
  if (exact.hits.empty()) return 1.0;
  std::size_t found = 0;
  for (const auto& e : exact.hits) {
    for (const auto& a : approx.hits) {
      if (a.key_id == e.key_id) {
        ++found;
        break;
      }
    }
  }
  return static_cast<double>(found) / static_cast<double>(exact.hits.size());
}

}  // namespace dknn
