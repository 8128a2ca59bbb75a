#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dknn/ivfpq.hpp"
#include "dknn/vector_store.hpp"

namespace dknn {

/// K * sum (N_i / N)^2, evaluated from exact integer sums.
double imbalance_factor(std::span<const std::size_t> sizes);

struct EnpStats {
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<std::size_t> samples;
};

/// Expected number of probes: for each query, the worst centroid rank (1-based)
/// among its reference neighbours, retrieved with `reference_nprobe` probes.
EnpStats enp(const IvfPqIndex& index, PointsView queries, std::size_t k, std::size_t reference_nprobe);

struct ClusteringScores {
  double homogeneity = 0.0;
  double completeness = 0.0;
  double v_measure = 0.0;
};

ClusteringScores clustering_metrics(std::span<const std::uint32_t> cluster_ids,
                                    std::span<const std::uint32_t> labels, double beta = 1.0);

/// Norm of the mean of the raw keys.
double mean_vector_norm(const VectorStore& store);

std::vector<std::size_t> cluster_size_histogram(const IvfPqIndex& index);

struct AnalysisOptions {
  std::size_t enp_queries = 1000;
  std::size_t k = 8;
  std::size_t reference_nprobe = 32;
  std::uint64_t seed = 0;
};

struct AnalysisReport {
  double imbalance_factor = 1.0;
  double spherical_variance = 0.0;
  double enp_mean = 0.0;
  double enp_std = 0.0;
  double homogeneity = 0.0;
  double completeness = 0.0;
  double v_measure = 0.0;
  double mean_vector_norm = 0.0;
  std::vector<std::size_t> cluster_sizes;
};

/// Runs every diagnostic. ENP queries are sampled uniformly from the store unless
/// `queries` is non-empty.
AnalysisReport analyze(const IvfPqIndex& index, const VectorStore& store, const AnalysisOptions& opts,
                       PointsView queries = {});

std::string to_json(const AnalysisReport& report);
// CSV rows are keyed by run id; the header is fixed.
void write_report_csv_header(std::ostream& out);
void write_report_csv_row(std::ostream& out, const std::string& run_id, const AnalysisReport& report);

}  // namespace dknn
