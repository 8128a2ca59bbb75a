#include "dknn/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <thread>

#include "dknn/error.hpp"
#include "dknn/geometry.hpp"
#include "dknn/rng.hpp"

namespace dknn {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Keeps results observable so the timed searches cannot be elided.
std::atomic<std::uint64_t> g_sink{0};

void run_batch(const IvfPqIndex& index, std::span<const double> queries, std::size_t dim, std::size_t first,
               std::size_t count, std::size_t k, std::size_t nprobe) {
  std::uint64_t acc = 0;
  const auto batch = search_batch(index, PointsView{queries.subspan(first * dim, count * dim), dim}, k, nprobe);
  for (const auto& r : batch) acc += r.hits.empty() ? 0 : r.hits.front().key_id;
  g_sink.fetch_add(acc, std::memory_order_relaxed);
}

}  // namespace

void BenchSpec::validate() const {
  require(query_count >= 1, Errc::kInvalidArgument, "query_count must be >= 1");
  require(batch_size >= 1, Errc::kInvalidArgument, "batch_size must be >= 1");
  require(nprobe >= 1, Errc::kInvalidArgument, "nprobe must be >= 1");
  require(k >= 1, Errc::kInvalidArgument, "k must be >= 1");
  require(workers >= 1, Errc::kInvalidArgument, "workers must be >= 1");
  require(repeats >= 1, Errc::kInvalidArgument, "repeats must be >= 1");
  require(noise >= 0.0, Errc::kInvalidArgument, "noise must be >= 0");
}

std::vector<double> make_bench_queries(const VectorStore& source, const BenchSpec& spec) {
  require(!source.empty(), Errc::kEmptyStore, "query source is empty");
  const std::size_t dim = source.dim();
  Rng rng(spec.seed);
  std::vector<double> out(spec.query_count * dim);
  std::normal_distribution<double> gauss(0.0, 1.0);

  if (spec.mode == QueryMode::kPerturbedKeys) {
    std::uniform_int_distribution<std::size_t> pick(0, source.size() - 1);
    const double per_coord = spec.noise / std::sqrt(static_cast<double>(dim));
    for (std::size_t i = 0; i < spec.query_count; ++i) {
      const auto key = source.key(pick(rng));
      const double sd = per_coord * norm(key);
      for (std::size_t t = 0; t < dim; ++t) out[i * dim + t] = key[t] + sd * gauss(rng);
    }
    return out;
  }

  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (std::size_t i = 0; i < source.size(); ++i) {
    const double n = norm(source.key(i));
    lo = std::min(lo, n);
    hi = std::max(hi, n);
  }
  std::uniform_real_distribution<double> length(lo, std::max(hi, std::nextafter(lo, hi + 1.0)));
  std::vector<double> v(dim);
  for (std::size_t i = 0; i < spec.query_count; ++i) {
    double vn = 0.0;
    do {
      for (double& x : v) x = gauss(rng);
      vn = norm(v);
    } while (vn < 1e-12);
    const double len = length(rng);
    for (std::size_t t = 0; t < dim; ++t) out[i * dim + t] = v[t] / vn * len;
  }
  return out;
}

BenchResult run_bench(const IvfPqIndex& index, const VectorStore& source, const BenchSpec& spec) {
  spec.validate();
  require(index.size() > 0, Errc::kEmptyIndex, "bench on an empty index");
  require(source.dim() == index.dim(), Errc::kBadShape, "query source dimension differs from the index");
  const std::size_t dim = index.dim();
  const std::size_t nprobe = std::min(spec.nprobe, index.nlist());
  const auto queries = make_bench_queries(source, spec);
  const std::size_t nbatches = (spec.query_count + spec.batch_size - 1) / spec.batch_size;
  auto batch_extent = [&](std::size_t b) {
    const std::size_t first = b * spec.batch_size;
    return std::pair{first, std::min(spec.batch_size, spec.query_count - first)};
  };

  BenchResult res;
  res.spec = spec;
  for (std::size_t rep = 0; rep < spec.repeats; ++rep) {
    for (std::size_t w = 0; w < spec.warmup_batches; ++w) {
      const auto [first, count] = batch_extent(w % nbatches);
      run_batch(index, queries, dim, first, count, spec.k, nprobe);
    }

    const auto t0 = Clock::now();
    if (spec.workers == 1) {
      for (std::size_t b = 0; b < nbatches; ++b) {
        const auto [first, count] = batch_extent(b);
        run_batch(index, queries, dim, first, count, spec.k, nprobe);
      }
    } else {
      std::atomic<std::size_t> next{0};
      std::vector<std::thread> pool;
      pool.reserve(spec.workers);
      for (std::size_t w = 0; w < spec.workers; ++w) {
        pool.emplace_back([&] {
          for (std::size_t b = next.fetch_add(1); b < nbatches; b = next.fetch_add(1)) {
            const auto [first, count] = batch_extent(b);
            run_batch(index, queries, dim, first, count, spec.k, nprobe);
          }
        });
      }
      for (auto& t : pool) t.join();
    }
    const double secs = seconds_since(t0);
    res.search_seconds.push_back(secs);
    res.qps_per_repeat.push_back(static_cast<double>(spec.query_count) / secs);
  }
  res.qps = median(res.qps_per_repeat);
  const auto sizes = cluster_size_histogram(index);
  res.imbalance_factor = imbalance_factor(sizes);
  res.nlist = index.nlist();
  res.size = index.size();
  return res;
}

std::vector<SweepRow> sweep_concentration(const BenchSpec& spec, std::span<const double> kappas,
                                          const SynthSpec& base, const BuildConfig& build) {
  require(!kappas.empty(), Errc::kInvalidArgument, "kappa list is empty");
  std::vector<SweepRow> rows;
  for (double kappa : kappas) {
    SweepRow row;
    row.kappa = kappa;
    SynthSpec s = base;
    s.kappa = kappa;

    auto t0 = Clock::now();
    const auto store = make_synthetic_store(s);
    row.timings.generate_seconds = seconds_since(t0);

    t0 = Clock::now();
    const auto index = build_index(store, build);
    row.timings.build_seconds = seconds_since(t0);

    const auto res = run_bench(index, store, spec);
    row.timings.search_seconds = median(res.search_seconds);
    row.qps = res.qps;
    row.imbalance_factor = res.imbalance_factor;
    row.nlist = res.nlist;
    row.size = res.size;
    row.dim = store.dim();
    rows.push_back(row);
  }
  return rows;
}

PipelineReport pipeline_experiment(const VectorStore& store, const DispersionConfig& disp, const BuildConfig& build,
                                   const BenchSpec& spec, const AnalysisOptions& analysis) {
  auto measure = [&](const VectorStore& s) {
    PipelineSide side;
    const auto t0 = Clock::now();
    const auto index = build_index(s, build);
    side.timings.build_seconds = seconds_since(t0);
    side.bench = run_bench(index, s, spec);
    side.timings.search_seconds = median(side.bench.search_seconds);
    side.report = analyze(index, s, analysis);
    return side;
  };

  PipelineReport out;
  out.before = measure(store);
  const auto t0 = Clock::now();
  auto dispersed = disperse(store, disp);
  const double disperse_seconds = seconds_since(t0);
  out.trace = std::move(dispersed.trace);
  out.after = measure(dispersed.store);
  out.after.timings.generate_seconds = disperse_seconds;
  return out;
}

void write_bench_csv_header(std::ostream& out) {
  out << "run_id,query_count,batch_size,nprobe,k,workers,repeats,qps_median,qps_min,qps_max,"
         "imbalance_factor,nlist,size\n";
}

void write_bench_csv_row(std::ostream& out, const std::string& run_id, const BenchResult& r) {
  const auto [mn, mx] = std::minmax_element(r.qps_per_repeat.begin(), r.qps_per_repeat.end());
  out << std::setprecision(10) << run_id << ',' << r.spec.query_count << ',' << r.spec.batch_size << ','
      << r.spec.nprobe << ',' << r.spec.k << ',' << r.spec.workers << ',' << r.spec.repeats << ',' << r.qps << ','
      << *mn << ',' << *mx << ',' << r.imbalance_factor << ',' << r.nlist << ',' << r.size << '\n';
}

void write_sweep_csv_header(std::ostream& out) {
  out << "kappa,qps,imbalance_factor,nlist,size,dim,generate_seconds,build_seconds,search_seconds\n";
}

void write_sweep_csv_row(std::ostream& out, const SweepRow& row) {
  out << std::setprecision(10) << row.kappa << ',' << row.qps << ',' << row.imbalance_factor << ',' << row.nlist
      << ',' << row.size << ',' << row.dim << ',' << row.timings.generate_seconds << ','
      << row.timings.build_seconds << ',' << row.timings.search_seconds << '\n';
}

}  // namespace dknn
