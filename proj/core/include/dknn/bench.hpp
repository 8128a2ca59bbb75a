#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dknn/analysis.hpp"
#include "dknn/dispersion.hpp"
#include "dknn/ivfpq.hpp"
#include "dknn/synth.hpp"
#include "dknn/vector_store.hpp"

namespace dknn {

enum class QueryMode {
  kPerturbedKeys,  // store keys plus Gaussian noise scaled to a fraction of the key norm
  kUniform,        // uniform directions with norms drawn from the store's norm range
};

struct BenchSpec {
  std::size_t query_count = 10000;
  std::size_t batch_size = 10;
  std::size_t nprobe = 32;
  std::size_t k = 8;
  std::size_t workers = 1;
  std::size_t warmup_batches = 10;
  std::size_t repeats = 3;
  QueryMode mode = QueryMode::kPerturbedKeys;
  double noise = 0.01;
  std::uint64_t seed = 0;

  void validate() const;
};

struct BenchResult {
  double qps = 0.0;  // median over repeats
  std::vector<double> qps_per_repeat;
  std::vector<double> search_seconds;  // wall time of the timed search phase per repeat
  BenchSpec spec;
  double imbalance_factor = 1.0;
  std::size_t nlist = 0;
  std::size_t size = 0;
};

/// Row-major queries, query_count * dim.
std::vector<double> make_bench_queries(const VectorStore& source, const BenchSpec& spec);

/// Times only the search phase. `source` supplies the query distribution.
BenchResult run_bench(const IvfPqIndex& index, const VectorStore& source, const BenchSpec& spec);

struct PhaseTimings {
  double generate_seconds = 0.0;
  double build_seconds = 0.0;
  double search_seconds = 0.0;
};

struct SweepRow {
  double kappa = 0.0;
  double qps = 0.0;
  double imbalance_factor = 1.0;
  std::size_t nlist = 0;
  std::size_t size = 0;
  std::size_t dim = 0;
  PhaseTimings timings;
};

/// For each kappa: generate a store from `base` (kappa replaced), build, bench.
std::vector<SweepRow> sweep_concentration(const BenchSpec& spec, std::span<const double> kappas,
                                          const SynthSpec& base, const BuildConfig& build);

struct PipelineSide {
  AnalysisReport report;
  BenchResult bench;
  PhaseTimings timings;
};

struct PipelineReport {
  PipelineSide before;
  PipelineSide after;
  DispersionTrace trace;
};

/// Builds, benches and analyzes the raw store, then the dispersed store.
PipelineReport pipeline_experiment(const VectorStore& store, const DispersionConfig& disp,
                                   const BuildConfig& build, const BenchSpec& spec,
                                   const AnalysisOptions& analysis = {});

void write_bench_csv_header(std::ostream& out);
void write_bench_csv_row(std::ostream& out, const std::string& run_id, const BenchResult& r);
void write_sweep_csv_header(std::ostream& out);
void write_sweep_csv_row(std::ostream& out, const SweepRow& row);

}  // namespace dknn
