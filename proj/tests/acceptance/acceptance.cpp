#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dknn/analysis.hpp"
#include "dknn/bench.hpp"
#include "dknn/dispersion.hpp"
#include "dknn/error.hpp"
#include "dknn/geometry.hpp"
#include "dknn/ivfpq.hpp"
#include "dknn/knn_interp.hpp"
#include "dknn/rng.hpp"
#include "dknn/synth.hpp"

using namespace dknn;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Options {
  fs::path cli;
  fs::path work = fs::temp_directory_path() / "dknn_acceptance";
  std::size_t c3_steps = 500;
  double c3_lr = 0.05;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

VectorStore synth(double kappa, std::size_t dim, std::size_t count, std::uint64_t seed, std::size_t components = 5) {
  SynthSpec s;
  s.dim = dim;
  s.count = count;
  s.kappa = kappa;
  s.components = components;
  s.seed = seed;
  return make_synthetic_store(s);
}

std::vector<double> gaussian(std::size_t n, Rng& rng) {
  std::normal_distribution<double> g;
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

Outcome oracle_equivalence(const Options&) {
  Rng rng(101);
  const std::size_t dims[3] = {8, 32, 128};
  std::size_t mismatches = 0, queries = 0;
  double worst = 0.0;
  for (int s = 0; s < 100; ++s) {
    const std::size_t dim = dims[s % 3];
    const std::size_t n = std::uniform_int_distribution<std::size_t>(50, s % 10 == 0 ? 10000 : 2000)(rng);
    const std::size_t k_lists = std::uniform_int_distribution<std::size_t>(1, 32)(rng);
    const std::size_t k = std::uniform_int_distribution<std::size_t>(1, 16)(rng);
    std::vector<std::uint32_t> labels(n);
    for (auto& l : labels) l = static_cast<std::uint32_t>(rng() % 10);
    const VectorStore store(dim, gaussian(n * dim, rng), std::move(labels));
    BuildConfig b;
    b.centroids = std::min(k_lists, n);
    b.pq_m = 1;
    b.raw_residuals = true;
    b.kmeans_iters = 10;
    b.seed = static_cast<std::uint64_t>(s);
    const auto index = build_index(store, b);
    for (int qi = 0; qi < 10; ++qi) {
      const auto q = gaussian(dim, rng);
      const auto a = search(index, q, k, index.nlist());
      const auto e = exact_search(store, q, k);
      ++queries;
      bool same = a.hits.size() == e.hits.size();
      for (std::size_t j = 0; same && j < a.hits.size(); ++j) {
        same = a.hits[j].key_id == e.hits[j].key_id;
        worst = std::max(worst, std::abs(a.hits[j].distance - e.hits[j].distance));
      }
      if (!same) ++mismatches;
    }
  }
  return {mismatches == 0 && worst <= 1e-6,
          fmt("%zu/%zu queries with id mismatch, max |distance diff| %.3g", mismatches, queries, worst)};
}

Outcome concentration_trend(const Options&) {
  SynthSpec base;
  base.dim = 128;
  base.count = 200000;
  base.seed = 7;
  BuildConfig b;
  b.centroids = 512;
  b.seed = 7;
  const std::vector<double> kappas{1, 10, 50, 100, 1000};
  const auto rows = sweep_concentration(BenchSpec{}, kappas, base, b);
  std::string detail;
  bool if_monotone = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    detail += fmt("k=%g qps=%.0f IF=%.3f; ", rows[i].kappa, rows[i].qps, rows[i].imbalance_factor);
    if (i > 0 && rows[i].imbalance_factor < rows[i - 1].imbalance_factor) if_monotone = false;
  }
  const double ratio = rows.front().qps / rows.back().qps;
  detail += fmt("qps ratio k1/k1000 %.3f, IF nondecreasing %s", ratio, if_monotone ? "yes" : "no");
  const bool pass = ratio >= 1.5 && rows.back().imbalance_factor > rows.front().imbalance_factor && if_monotone;
  return {pass, detail};
}

Outcome dispersion_pipeline(const Options& opt) {
  const auto store = synth(1000, 32, 100000, 11);
  DispersionConfig d;
  d.regularizer = Regularizer::kSliced;
  d.steps = opt.c3_steps;
  d.step_size = opt.c3_lr;
  d.seed = 11;
  BuildConfig b;
  b.centroids = 256;
  b.seed = 11;
  AnalysisOptions a;
  a.seed = 11;
  const auto r = pipeline_experiment(store, d, b, BenchSpec{}, a);
  const auto& before = r.before;
  const auto& after = r.after;
  const bool if_ok = after.report.imbalance_factor <= 0.7 * before.report.imbalance_factor;
  const bool svar_ok = after.report.spherical_variance >= before.report.spherical_variance + 0.2;
  const bool qps_ok = after.bench.qps >= before.bench.qps;
  return {if_ok && svar_ok && qps_ok,
          fmt("IF %.3f -> %.3f (%s), svar %.4f -> %.4f (%s), qps %.0f -> %.0f (%s), ENP %.3f -> %.3f",
              before.report.imbalance_factor, after.report.imbalance_factor, if_ok ? "ok" : "fail",
              before.report.spherical_variance, after.report.spherical_variance, svar_ok ? "ok" : "fail",
              before.bench.qps, after.bench.qps, qps_ok ? "ok" : "fail", before.report.enp_mean,
              after.report.enp_mean)};
}

Outcome regularizer_comparison(const Options&) {
  int wins = 0;
  std::string detail;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto store = synth(50, 16, 2000, seed, 1);
    DispersionConfig m, s;
    m.regularizer = Regularizer::kMhe;
    s.regularizer = Regularizer::kSliced;
    m.steps = s.steps = 400;
    m.step_size = s.step_size = 0.01;
    m.seed = s.seed = seed;
    const auto r = compare_regularizers(store, m, s);
    const auto ts = r.sliced.first_step_reaching(0.5);
    const auto tm = r.mhe.first_step_reaching(0.5);
    const bool win = ts && (!tm || *ts <= *tm);
    wins += win;
    auto show = [](const std::optional<std::size_t>& t) { return t ? std::to_string(*t) : std::string("never"); };
    detail += fmt("seed %d: sliced %s, mhe %s; ", static_cast<int>(seed), show(ts).c_str(), show(tm).c_str());
  }
  detail += fmt("sliced no later in %d/3", wins);
  return {wins >= 2, detail};
}

Outcome interpolation(const Options&) {
  QueryResult r;
  r.hits = {{0, 0.0, 0}, {1, 1.0, 1}, {2, 1.0, 1}};
  const auto p = knn_distribution(r, 1.0, 2);
  const double e = std::exp(-1.0);
  const double err = std::max(std::abs(p[0] - 1.0 / (1 + 2 * e)), std::abs(p[1] - 2 * e / (1 + 2 * e)));

  Rng rng(55);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> vs(1, 50);
  double worst = 0.0;
  for (int t = 0; t < 100000; ++t) {
    const std::size_t v = vs(rng);
    std::vector<double> a(v), b(v);
    double sa = 0, sb = 0;
    for (std::size_t i = 0; i < v; ++i) sa += a[i] = u(rng), sb += b[i] = u(rng);
    for (std::size_t i = 0; i < v; ++i) a[i] /= sa, b[i] /= sb;
    const double lambda = u(rng);
    const auto m = interpolate(Distribution(a), Distribution(b), lambda);
    double sum = 0.0;
    for (std::size_t i = 0; i < v; ++i) {
      sum += m[i];
      worst = std::max(worst, std::abs(m[i] - ((1 - lambda) * a[i] + lambda * b[i])));
      if (m[i] < std::min(a[i], b[i]) - 1e-9 || m[i] > std::max(a[i], b[i]) + 1e-9) worst = std::max(worst, 1.0);
    }
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  return {err <= 1e-12 && worst <= 1e-9,
          fmt("three-hit error %.3g, max convexity/normalization error %.3g", err, worst)};
}

struct Scores {
  double h, c, v;
};

Scores entropy_oracle(const std::vector<std::uint32_t>& k, const std::vector<std::uint32_t>& c) {
  const double n = static_cast<double>(k.size());
  std::map<std::pair<std::uint32_t, std::uint32_t>, double> joint;
  std::map<std::uint32_t, double> nk, nc;
  for (std::size_t i = 0; i < k.size(); ++i) {
    joint[{c[i], k[i]}] += 1;
    nk[k[i]] += 1;
    nc[c[i]] += 1;
  }
  double hck = 0, hkc = 0, hc = 0, hk = 0;
  for (const auto& [key, a] : joint) {
    hck -= a / n * std::log(a / nk[key.second]);
    hkc -= a / n * std::log(a / nc[key.first]);
  }
  for (const auto& [_, a] : nc) hc -= a / n * std::log(a / n);
  for (const auto& [_, a] : nk) hk -= a / n * std::log(a / n);
  const double h = hc == 0 ? 1.0 : 1.0 - hck / hc;
  const double m = hk == 0 ? 1.0 : 1.0 - hkc / hk;
  return {h, m, h + m == 0 ? 0.0 : 2 * h * m / (h + m)};
}

Outcome clustering_oracle(const Options&) {
  Rng rng(66);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + rng() % 200;
    const std::uint32_t nk = 1 + rng() % 12, ncl = 1 + rng() % 12;
    std::vector<std::uint32_t> k(n), c(n);
    for (std::size_t i = 0; i < n; ++i) k[i] = rng() % nk, c[i] = rng() % ncl;
    const auto got = clustering_metrics(k, c);
    const auto want = entropy_oracle(k, c);
    worst = std::max({worst, std::abs(got.homogeneity - want.h), std::abs(got.completeness - want.c),
                      std::abs(got.v_measure - want.v)});
  }
  const std::vector<std::uint32_t> k{0, 0, 1, 1, 2, 2}, c{5, 5, 3, 3, 9, 9};
  const auto perfect = clustering_metrics(k, c);
  const bool exact = perfect.homogeneity == 1.0 && perfect.completeness == 1.0 && perfect.v_measure == 1.0;
  return {worst <= 1e-10 && exact, fmt("max deviation from oracle %.3g, perfect case (%.17g, %.17g, %.17g)", worst,
                                       perfect.homogeneity, perfect.completeness, perfect.v_measure)};
}

Outcome imbalance_boundaries(const Options&) {
  const std::vector<std::size_t> equal(64, 1000);
  std::vector<std::size_t> single(64, 0);
  single[17] = 5000;
  const double a = imbalance_factor(equal), b = imbalance_factor(single);
  return {a == 1.0 && b == 64.0, fmt("equal sizes %.17g, single nonempty of 64 %.17g", a, b)};
}

Outcome enp_sanity(const Options&) {
  VectorStore sep(2);
  const double cx[4] = {100, -100, 0, 0}, cy[4] = {0, 0, 100, -100};
  for (std::uint32_t g = 0; g < 4; ++g) {
    for (int j = 0; j < 8; ++j) {
      sep.push_back(std::vector<double>{cx[g] + std::cos(0.7 * j), cy[g] + std::sin(0.7 * j)}, g);
    }
  }
  BuildConfig raw;
  raw.centroids = 4;
  raw.pq_m = 1;
  raw.raw_residuals = true;
  const auto sep_index = build_index(sep, raw);
  const auto sep_enp = enp(sep_index, sep.view(), 8, 4);

  BuildConfig b;
  b.centroids = 256;
  b.seed = 5;
  AnalysisOptions a;
  a.seed = 5;
  const auto lo = synth(1, 128, 100000, 5);
  const auto hi = synth(1000, 128, 100000, 5);
  const auto r_lo = analyze(build_index(lo, b), lo, a);
  const auto r_hi = analyze(build_index(hi, b), hi, a);
  const bool pass = sep_enp.mean == 1.0 && r_hi.enp_mean > r_lo.enp_mean;
  return {pass, fmt("separated store ENP %.17g; ENP k=1000 %.3f +- %.3f vs k=1 %.3f +- %.3f", sep_enp.mean,
                    r_hi.enp_mean, r_hi.enp_std, r_lo.enp_mean, r_lo.enp_std)};
}

Outcome gradient_checks(const Options&) {
  Rng rng(99);
  const double h = 1e-5;
  double worst_mhe = 0.0, worst_sliced = 0.0;
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
  for (int t = 0; t < 20; ++t) {
    const std::size_t dim = 3 + t % 4;
    std::vector<double> x;
    for (int i = 0; i < 5; ++i) {
      const auto d = Direction::normalized(gaussian(dim, rng));
      x.insert(x.end(), d.coords().begin(), d.coords().end());
    }
    const std::vector<GreatCircle> circles{sample_great_circle(dim, rng), sample_great_circle(dim, rng)};
    const auto gm = mhe_energy_gradient(PointsView{x, dim}, 1.0);
    const auto gs = sliced_loss_gradient(PointsView{x, dim}, circles);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double keep = x[i];
      x[i] = keep + h;
      const double mp = mhe_energy(PointsView{x, dim}, 1.0), sp = sliced_loss(PointsView{x, dim}, circles);
      x[i] = keep - h;
      const double mm = mhe_energy(PointsView{x, dim}, 1.0), sm = sliced_loss(PointsView{x, dim}, circles);
      x[i] = keep;
      worst_mhe = std::max(worst_mhe, rel(gm.gradient[i], (mp - mm) / (2 * h)));
      worst_sliced = std::max(worst_sliced, rel(gs.gradient[i], (sp - sm) / (2 * h)));
    }
  }
  return {worst_mhe <= 1e-4 && worst_sliced <= 1e-4,
          fmt("max relative error MHE %.3g, sliced %.3g", worst_mhe, worst_sliced)};
}

Outcome sampler_checks(const Options&) {
  Rng rng(123);
  const auto mu = Direction::normalized(std::vector<double>{1.0, 2.0, -0.5});
  auto mean_of = [](const std::vector<Direction>& s) {
    std::vector<double> m(s.front().dim(), 0.0);
    for (const auto& d : s)
      for (std::size_t i = 0; i < m.size(); ++i) m[i] += d[i] / static_cast<double>(s.size());
    return m;
  };
  const auto m100 = mean_of(sample_power_spherical({mu, 100.0}, 10000, 3, rng));
  const double cosang = dot(m100, mu.coords()) / norm(m100);
  const double angle = std::acos(std::clamp(cosang, -1.0, 1.0)) * 180.0 / std::numbers::pi;
  double r[3];
  const double ks[3] = {1, 10, 100};
  for (int i = 0; i < 3; ++i) r[i] = norm(mean_of(sample_power_spherical({mu, ks[i]}, 10000, 3, rng)));
  const double r0 = norm(mean_of(sample_power_spherical({mu, 0.0}, 10000, 3, rng)));
  const bool pass = angle < 5.0 && r[0] < r[1] && r[1] < r[2] && r0 < 0.05;
  return {pass, fmt("mean direction off by %.3f deg; resultant length %.4f < %.4f < %.4f; kappa 0 mean norm %.4f",
                    angle, r[0], r[1], r[2], r0)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism(const Options& opt) {
  if (opt.cli.empty()) throw Error(Errc::kInvalidArgument, "criterion 11 needs --cli");
  fs::create_directories(opt.work);
  const std::string cli = opt.cli.string();
  auto run_once = [&](const std::string& tag) {
    const auto dir = opt.work / tag;
    fs::create_directories(dir);
    const auto p = [&](const char* name) { return (dir / name).string(); };
    const std::vector<std::string> cmds{
        cli + " synth --dim 16 --count 5000 --kappa 50 --seed 9 --out " + p("keys.bin"),
        cli + " disperse --in " + p("keys.bin") + " --out " + p("dispersed.bin") +
            " --reg sliced --steps 20 --lr 0.05 --batch 1024 --seed 9 --trace " + p("trace.csv"),
        cli + " build --in " + p("dispersed.bin") + " --centroids 32 --pq-m 4 --seed 9 --out " + p("index.idx"),
    };
    for (const auto& c : cmds) {
      if (std::system(c.c_str()) != 0) throw Error(Errc::kIo, "command failed: " + c);
    }
    return std::vector<std::string>{slurp(p("keys.bin")), slurp(p("dispersed.bin")), slurp(p("trace.csv")),
                                    slurp(p("index.idx"))};
  };
  const auto a = run_once("run_a");
  const auto b = run_once("run_b");
  const char* names[4] = {"synth", "disperse", "trace", "build"};
  std::string detail;
  bool pass = true;
  for (int i = 0; i < 4; ++i) {
    const bool same = !a[i].empty() && a[i] == b[i];
    pass = pass && same;
    detail += fmt("%s %s (%zu bytes); ", names[i], same ? "identical" : "DIFFERENT", a[i].size());
  }
  return {pass, detail};
}

struct Criterion {
  int id;
  const char* name;
  std::function<Outcome(const Options&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dknn acceptance suite"};
  std::vector<int> only;
  Options opt;
  app.add_option("--only", only, "Criteria to run (default: all)");
  app.add_option("--cli", opt.cli, "Path to the dknn binary");
  app.add_option("--work", opt.work, "Scratch directory");
  app.add_option("--c3-steps", opt.c3_steps, "Dispersion steps for the pipeline criterion");
  app.add_option("--c3-lr", opt.c3_lr, "Dispersion step size for the pipeline criterion");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all{
      {1, "oracle equivalence", oracle_equivalence},
      {2, "concentration trend", concentration_trend},
      {3, "dispersion pipeline", dispersion_pipeline},
      {4, "regularizer comparison", regularizer_comparison},
      {5, "interpolation", interpolation},
      {6, "clustering metrics", clustering_oracle},
      {7, "imbalance factor boundaries", imbalance_boundaries},
      {8, "expected neighbour partitions", enp_sanity},
      {9, "gradient checks", gradient_checks},
      {10, "power spherical sampler", sampler_checks},
      {11, "determinism", determinism},
  };

  int failures = 0;
  for (const auto& c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run(opt);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << "criterion " << c.id << " (" << c.name << "): " << (o.pass ? "PASS" : "FAIL") << " [" << std::fixed
              << std::setprecision(1) << secs << " s] " << o.detail << std::endl;
    failures += !o.pass;
  }
  return failures == 0 ? 0 : 1;
}
