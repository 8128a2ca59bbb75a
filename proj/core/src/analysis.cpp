#include "dknn/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <json.hpp>
#include <ostream>
#include <utility>

#include "dknn/error.hpp"
#include "dknn/geometry.hpp"
#include "dknn/rng.hpp"

namespace dknn {

double imbalance_factor(std::span<const std::size_t> sizes) {
  require(!sizes.empty(), Errc::kEmptyPartition, "imbalance factor of zero clusters");
  unsigned __int128 total = 0;
  unsigned __int128 sum_sq = 0;
  for (auto s : sizes) {
    total += s;
    sum_sq += static_cast<unsigned __int128>(s) * s;
  }
  require(total > 0, Errc::kEmptyPartition, "imbalance factor of an empty partition");
  // K * sum N_i^2 / N^2 as a single rounding of an exact ratio.
  const unsigned __int128 num = sum_sq * sizes.size();
  const unsigned __int128 den = total * total;
  const unsigned __int128 whole = num / den;
  const unsigned __int128 rem = num % den;
  return static_cast<double>(whole) + static_cast<double>(static_cast<long double>(rem) / static_cast<long double>(den));
}

EnpStats enp(const IvfPqIndex& index, PointsView queries, std::size_t k, std::size_t reference_nprobe) {
  require(index.size() > 0, Errc::kEmptyIndex, "ENP on an empty index");
  require(queries.size() > 0, Errc::kInvalidArgument, "ENP needs at least one query");
  require(reference_nprobe >= 1, Errc::kInvalidArgument, "reference nprobe must be >= 1");
  const std::size_t nprobe = std::min(reference_nprobe, index.nlist());

  EnpStats out;
  out.samples.reserve(queries.size());
  std::vector<std::size_t> rank_of(index.nlist());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto q = queries.row(i);
    const auto order = index.rank_centroids(q);
    for (std::size_t r = 0; r < order.size(); ++r) rank_of[order[r]] = r + 1;
    const auto ref = index.search(q, k, nprobe);
    std::size_t worst = 1;
    for (const auto& h : ref.hits) worst = std::max(worst, rank_of[index.list_of(h.key_id)]);
    out.samples.push_back(worst);
  }
  double sum = 0.0;
  for (auto s : out.samples) sum += static_cast<double>(s);
  out.mean = sum / static_cast<double>(out.samples.size());
  double var = 0.0;
  for (auto s : out.samples) var += (static_cast<double>(s) - out.mean) * (static_cast<double>(s) - out.mean);
  out.stddev = std::sqrt(var / static_cast<double>(out.samples.size()));
  return out;
}

ClusteringScores clustering_metrics(std::span<const std::uint32_t> cluster_ids,
                                    std::span<const std::uint32_t> labels, double beta) {
  require(cluster_ids.size() == labels.size(), Errc::kLengthMismatch, "cluster ids and labels differ in length");
  require(!labels.empty(), Errc::kInvalidArgument, "clustering metrics need at least one point");
  require(beta > 0.0, Errc::kInvalidArgument, "beta must be > 0");
  const double n = static_cast<double>(labels.size());

  // Joint counts n_{v,i} from sorted (cluster, label) pairs; marginals likewise.
  std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) pairs[i] = {cluster_ids[i], labels[i]};
  std::sort(pairs.begin(), pairs.end());

  auto run_lengths = [](auto first, auto last, auto key) {
    std::vector<std::pair<std::uint32_t, double>> runs;
    for (auto it = first; it != last; ++it) {
      if (runs.empty() || runs.back().first != key(*it)) runs.emplace_back(key(*it), 0.0);
      runs.back().second += 1.0;
    }
    return runs;
  };

  std::vector<std::uint32_t> sorted_clusters(cluster_ids.begin(), cluster_ids.end());
  std::vector<std::uint32_t> sorted_labels(labels.begin(), labels.end());
  std::sort(sorted_clusters.begin(), sorted_clusters.end());
  std::sort(sorted_labels.begin(), sorted_labels.end());
  const auto identity = [](std::uint32_t v) { return v; };
  const auto cluster_sizes = run_lengths(sorted_clusters.begin(), sorted_clusters.end(), identity);
  const auto class_sizes = run_lengths(sorted_labels.begin(), sorted_labels.end(), identity);

  auto lookup = [](const std::vector<std::pair<std::uint32_t, double>>& runs, std::uint32_t key) {
    return std::lower_bound(runs.begin(), runs.end(), std::make_pair(key, 0.0),
                            [](const auto& a, const auto& b) { return a.first < b.first; })
        ->second;
  };

  double h_v_given_k = 0.0;
  double h_k_given_v = 0.0;
  for (std::size_t i = 0; i < pairs.size();) {
    std::size_t j = i;
    while (j < pairs.size() && pairs[j] == pairs[i]) ++j;
    const double nvi = static_cast<double>(j - i);
    h_v_given_k -= nvi / n * std::log(nvi / lookup(cluster_sizes, pairs[i].first));
    h_k_given_v -= nvi / n * std::log(nvi / lookup(class_sizes, pairs[i].second));
    i = j;
  }
  double h_v = 0.0;
  for (const auto& [_, c] : class_sizes) h_v -= c / n * std::log(c / n);
  double h_k = 0.0;
  for (const auto& [_, c] : cluster_sizes) h_k -= c / n * std::log(c / n);

  ClusteringScores s;
  s.homogeneity = h_v == 0.0 ? 1.0 : std::clamp(1.0 - h_v_given_k / h_v, 0.0, 1.0);
  s.completeness = h_k == 0.0 ? 1.0 : std::clamp(1.0 - h_k_given_v / h_k, 0.0, 1.0);
  const double den = beta * s.homogeneity + s.completeness;
  s.v_measure = den == 0.0 ? 0.0 : (1.0 + beta) * s.homogeneity * s.completeness / den;
  return s;
}

double mean_vector_norm(const VectorStore& store) {
  require(!store.empty(), Errc::kEmptyStore, "mean of an empty store");
  std::vector<double> sum(store.dim(), 0.0);
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto key = store.key(i);
    for (std::size_t t = 0; t < sum.size(); ++t) sum[t] += key[t];
  }
  return norm(sum) / static_cast<double>(store.size());
}

std::vector<std::size_t> cluster_size_histogram(const IvfPqIndex& index) {
  std::vector<std::size_t> sizes;
  sizes.reserve(index.nlist());
  for (const auto& list : index.lists()) sizes.push_back(list.ids.size());
  return sizes;
}

AnalysisReport analyze(const IvfPqIndex& index, const VectorStore& store, const AnalysisOptions& opts,
                       PointsView queries) {
  require(index.size() == store.size() && index.dim() == store.dim(), Errc::kSizeMismatch,
          "index and store describe different datastores");
  require(!store.empty(), Errc::kEmptyStore, "cannot analyze an empty store");
  AnalysisReport rep;
  rep.cluster_sizes = cluster_size_histogram(index);
  rep.imbalance_factor = imbalance_factor(rep.cluster_sizes);

  std::vector<double> dirs(store.keys().size());
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto key = store.key(i);
    const double nk = norm(key);
    require(nk > kZeroNormEps, Errc::kZeroVector, "store contains a zero key");
    for (std::size_t t = 0; t < store.dim(); ++t) dirs[i * store.dim() + t] = key[t] / nk;
  }
  rep.spherical_variance = spherical_variance(PointsView{dirs, store.dim()});

  std::vector<double> sampled;
  if (queries.size() == 0) {
    const std::size_t count = std::min(opts.enp_queries, store.size());
    std::vector<std::size_t> perm(store.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    Rng rng(opts.seed);
    for (std::size_t i = 0; i < count; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, perm.size() - 1);
      std::swap(perm[i], perm[pick(rng)]);
    }
    sampled.reserve(count * store.dim());
    for (std::size_t i = 0; i < count; ++i) {
      const auto key = store.key(perm[i]);
      sampled.insert(sampled.end(), key.begin(), key.end());
    }
    queries = PointsView{sampled, store.dim()};
  }
  const auto e = enp(index, queries, opts.k, opts.reference_nprobe);
  rep.enp_mean = e.mean;
  rep.enp_std = e.stddev;

  const auto scores = clustering_metrics(index.key_lists(), store.labels());
  rep.homogeneity = scores.homogeneity;
  rep.completeness = scores.completeness;
  rep.v_measure = scores.v_measure;
  rep.mean_vector_norm = mean_vector_norm(store);
  return rep;
}

std::string to_json(const AnalysisReport& r) {
  nlohmann::ordered_json j;
  j["imbalance_factor"] = r.imbalance_factor;
  j["spherical_variance"] = r.spherical_variance;
  j["enp_mean"] = r.enp_mean;
  j["enp_std"] = r.enp_std;
  j["homogeneity"] = r.homogeneity;
  j["completeness"] = r.completeness;
  j["v_measure"] = r.v_measure;
  j["mean_vector_norm"] = r.mean_vector_norm;
  j["cluster_sizes"] = r.cluster_sizes;
  return j.dump(2);
}

void write_report_csv_header(std::ostream& out) {
  out << "run_id,imbalance_factor,spherical_variance,enp_mean,enp_std,homogeneity,completeness,v_measure,"
         "mean_vector_norm,nlist,size\n";
}

void write_report_csv_row(std::ostream& out, const std::string& run_id, const AnalysisReport& r) {
  std::size_t total = 0;
  for (auto s : r.cluster_sizes) total += s;
  out << std::setprecision(17) << run_id << ',' << r.imbalance_factor << ',' << r.spherical_variance << ','
      << r.enp_mean << ',' << r.enp_std << ',' << r.homogeneity << ',' << r.completeness << ',' << r.v_measure
      << ',' << r.mean_vector_norm << ',' << r.cluster_sizes.size() << ',' << total << '\n';
}

}  // namespace dknn
