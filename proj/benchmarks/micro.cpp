#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "dknn/dispersion.hpp"
#include "dknn/geometry.hpp"
#include "dknn/ivfpq.hpp"
#include "dknn/kmeans.hpp"
#include "dknn/rng.hpp"
#include "dknn/synth.hpp"

using namespace dknn;

namespace {

VectorStore store_of(double kappa, std::size_t dim, std::size_t count) {
  SynthSpec s;
  s.dim = dim;
  s.count = count;
  s.kappa = kappa;
  s.seed = 1;
  return make_synthetic_store(s);
}

void BM_Search(benchmark::State& state) {
  static const auto store = store_of(10, 64, 50000);
  static const auto index = [] {
    BuildConfig b;
    b.centroids = 256;
    b.seed = 1;
    return build_index(store, b);
  }();
  const auto nprobe = static_cast<std::size_t>(state.range(0));
  std::size_t i = 0;
  for (auto _ : state) {
    auto r = index.search(store.key(i++ % store.size()), 8, nprobe);
    benchmark::DoNotOptimize(r);
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_Search)->Arg(1)->Arg(8)->Arg(32)->Arg(128);

void BM_ExactSearch(benchmark::State& state) {
  static const auto store = store_of(10, 64, 50000);
  std::size_t i = 0;
  for (auto _ : state) {
    auto r = exact_search(store, store.key(i++ % store.size()), 8);
    benchmark::DoNotOptimize(r);
  }
}
BENCHMARK(BM_ExactSearch);

void BM_KMeans(benchmark::State& state) {
  static const auto store = store_of(10, 64, 20000);
  const auto k = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto m = kmeans_train(store.view(), k, 5, 1);
    benchmark::DoNotOptimize(m);
  }
}
BENCHMARK(BM_KMeans)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_SlicedLossGradient(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t dim = 32;
  Rng rng(3);
  std::normal_distribution<double> g;
  std::vector<double> x(n * dim);
  for (auto& v : x) v = g(rng);
  const std::vector<GreatCircle> circles{sample_great_circle(dim, rng)};
  for (auto _ : state) {
    auto lg = sliced_loss_gradient(PointsView{x, dim}, circles);
    benchmark::DoNotOptimize(lg);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_SlicedLossGradient)->Arg(1024)->Arg(4096);

void BM_MheGradient(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::size_t dim = 32;
  Rng rng(4);
  std::normal_distribution<double> g;
  std::vector<double> x(n * dim);
  for (auto& v : x) v = g(rng);
  for (auto _ : state) {
    auto lg = mhe_energy_gradient(PointsView{x, dim}, 1.0);
    benchmark::DoNotOptimize(lg);
  }
}
BENCHMARK(BM_MheGradient)->Arg(256)->Arg(1024);

}  // namespace
BENCHMARK_MAIN();
