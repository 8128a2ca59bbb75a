// dknn: command-line front end for the datastore toolkit.

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dknn/analysis.hpp"
#include "dknn/bench.hpp"
#include "dknn/dispersion.hpp"
#include "dknn/error.hpp"
#include "dknn/ivfpq.hpp"
#include "dknn/knn_interp.hpp"
#include "dknn/synth.hpp"
#include "dknn/vector_store.hpp"

namespace fs = std::filesystem;
using namespace dknn;

namespace {

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode);
  if (!out) fail(Errc::kIo, "cannot open " + path.string() + " for writing");
  return out;
}

// Rows of comma-separated numbers; a first line that does not parse is a header.
std::vector<std::vector<double>> read_numeric_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(Errc::kIo, "cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool ok = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t", used) != std::string::npos) ok = false;
      } catch (const std::exception&) {
        ok = false;
      }
      if (!ok) break;
    }
    if (!ok) {
      if (rows.empty() && line_no == 1) continue;
      fail(Errc::kFormat, path.string() + ":" + std::to_string(line_no) + ": not a numeric row");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// Approximate keys rebuilt from an index, labels included.
VectorStore reconstructed_store(const IvfPqIndex& index) {
  VectorStore store(index.dim());
  store.reserve(index.size());
  for (std::uint64_t id = 0; id < index.size(); ++id) store.push_back(index.reconstruct(id), index.labels()[id]);
  return store;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (cell.empty()) continue;
    try {
      out.push_back(std::stod(cell));
    } catch (const std::exception&) {
      fail(Errc::kInvalidArgument, "bad list entry '" + cell + "'");
    }
  }
  require(!out.empty(), Errc::kInvalidArgument, "empty list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Datastore construction, dispersion, IVF-PQ search and analysis"};
  app.require_subcommand(1);

  // synth
  SynthSpec synth_spec;
  fs::path synth_out;
  auto* synth = app.add_subcommand("synth", "Sample a power spherical mixture store");
  synth->add_option("--dim", synth_spec.dim, "Key dimension")->capture_default_str();
  synth->add_option("--count", synth_spec.count, "Number of keys")->required();
  synth->add_option("--components", synth_spec.components, "Mixture components")->capture_default_str();
  synth->add_option("--kappa", synth_spec.kappa, "Shared concentration")->capture_default_str();
  synth->add_option("--norm-lo", synth_spec.norm_lo, "Lower key length")->capture_default_str();
  synth->add_option("--norm-hi", synth_spec.norm_hi, "Upper key length")->capture_default_str();
  synth->add_option("--seed", synth_spec.seed, "Random seed")->capture_default_str();
  synth->add_option("--out", synth_out, "Output store")->required();

  // disperse
  DispersionConfig disp_cfg;
  fs::path disp_in, disp_out, disp_trace;
  std::string disp_reg = "sliced";
  auto* disp = app.add_subcommand("disperse", "Spread key directions, keeping norms");
  disp->add_option("--in", disp_in, "Input store")->required();
  disp->add_option("--out", disp_out, "Output store")->required();
  disp->add_option("--reg", disp_reg, "Regularizer")->check(CLI::IsMember({"sliced", "mhe"}))->capture_default_str();
  disp->add_option("--steps", disp_cfg.steps, "Gradient steps")->capture_default_str();
  disp->add_option("--lr", disp_cfg.step_size, "Step size")->capture_default_str();
  disp->add_option("--sigma", disp_cfg.sigma, "MHE kernel scale")->capture_default_str();
  disp->add_option("--circles", disp_cfg.circles_per_step, "Great circles per step")->capture_default_str();
  disp->add_option("--batch", disp_cfg.batch_size, "Keys per step")->capture_default_str();
  disp->add_option("--seed", disp_cfg.seed, "Random seed")->capture_default_str();
  disp->add_option("--trace", disp_trace, "Trace CSV");

  // build
  BuildConfig build_cfg;
  fs::path build_in, build_out;
  auto* build = app.add_subcommand("build", "Train and fill an IVF-PQ index");
  build->add_option("--in", build_in, "Input store")->required();
  build->add_option("--centroids", build_cfg.centroids, "Coarse centroids")->capture_default_str();
  build->add_option("--pq-m", build_cfg.pq_m, "PQ sub-quantizers")->capture_default_str();
  build->add_option("--pq-bits", build_cfg.pq_bits, "Bits per PQ code")->capture_default_str();
  build->add_option("--train-sample", build_cfg.train_sample, "Training sample size")->capture_default_str();
  build->add_option("--seed", build_cfg.seed, "Random seed")->capture_default_str();
  build->add_option("--out", build_out, "Output index")->required();

  // query
  fs::path query_index, query_file, query_out;
  std::size_t query_k = 8, query_nprobe = kDefaultNprobe;
  auto* query = app.add_subcommand("query", "Search an index with queries from a store file");
  query->add_option("--index", query_index, "Index file")->required();
  query->add_option("--queries", query_file, "Query vectors (store format)")->required();
  query->add_option("--k", query_k, "Neighbours per query")->capture_default_str();
  query->add_option("--nprobe", query_nprobe, "Probed lists")->capture_default_str();
  query->add_option("--out", query_out, "Output CSV")->required();

  // bench
  BenchSpec bench_spec;
  fs::path bench_index, bench_store, bench_out;
  std::string bench_run_id = "bench";
  auto* bench = app.add_subcommand("bench", "Measure search throughput");
  bench->add_option("--index", bench_index, "Index file")->required();
  bench->add_option("--queries", bench_spec.query_count, "Number of queries")->capture_default_str();
  bench->add_option("--batch", bench_spec.batch_size, "Queries per batch")->capture_default_str();
  bench->add_option("--nprobe", bench_spec.nprobe, "Probed lists")->capture_default_str();
  bench->add_option("--k", bench_spec.k, "Neighbours per query")->capture_default_str();
  bench->add_option("--workers", bench_spec.workers, "Concurrent workers")->capture_default_str();
  bench->add_option("--repeats", bench_spec.repeats, "Timed repeats")->capture_default_str();
  bench->add_option("--out", bench_out, "CSV to append to")->required();
  bench->add_option("--store", bench_store, "Store to draw queries from (default: keys rebuilt from the index)");
  bench->add_option("--seed", bench_spec.seed, "Query seed")->capture_default_str();
  bench->add_option("--run-id", bench_run_id, "Row key")->capture_default_str();

  // analyze
  AnalysisOptions analysis_opts;
  fs::path analyze_index, analyze_store, analyze_out;
  auto* analyze_cmd = app.add_subcommand("analyze", "Report clustering diagnostics as JSON");
  analyze_cmd->add_option("--index", analyze_index, "Index file")->required();
  analyze_cmd->add_option("--store", analyze_store, "Store the index was built from")->required();
  analyze_cmd->add_option("--enp-queries", analysis_opts.enp_queries, "Queries for ENP")->capture_default_str();
  analyze_cmd->add_option("--seed", analysis_opts.seed, "Query seed")->capture_default_str();
  analyze_cmd->add_option("--out", analyze_out, "Output JSON")->required();

  // sweep
  SynthSpec sweep_base;
  BuildConfig sweep_build;
  BenchSpec sweep_bench;
  std::string sweep_kappas = "1,10,50,100,1000";
  fs::path sweep_out;
  sweep_build.centroids = 512;
  sweep_base.count = 200000;
  auto* sweep = app.add_subcommand("sweep", "Queries per second across concentrations");
  sweep->add_option("--kappas", sweep_kappas, "Comma-separated kappa list")->capture_default_str();
  sweep->add_option("--count", sweep_base.count, "Keys per store")->capture_default_str();
  sweep->add_option("--dim", sweep_base.dim, "Key dimension")->capture_default_str();
  sweep->add_option("--centroids", sweep_build.centroids, "Coarse centroids")->capture_default_str();
  sweep->add_option("--seed", sweep_base.seed, "Random seed")->capture_default_str();
  sweep->add_option("--out", sweep_out, "Output CSV")->required();

  // interp
  InterpConfig interp_cfg;
  fs::path interp_index, interp_store, interp_queries, interp_probs, interp_out;
  auto* interp = app.add_subcommand("interp", "Mix model distributions with retrieved neighbours");
  interp->add_option("--index", interp_index, "Index file")->required();
  interp->add_option("--store", interp_store, "Store the index was built from")->required();
  interp->add_option("--queries", interp_queries, "Query vectors (store format)")->required();
  interp->add_option("--model-probs", interp_probs, "CSV, one row of probabilities per query")->required();
  interp->add_option("--lambda", interp_cfg.lambda, "Interpolation weight")->capture_default_str();
  interp->add_option("--temp", interp_cfg.temperature, "Temperature")->capture_default_str();
  interp->add_option("--k", interp_cfg.k, "Neighbours per query")->capture_default_str();
  interp->add_option("--nprobe", interp_cfg.nprobe, "Probed lists")->capture_default_str();
  interp->add_flag("--exact", interp_cfg.exact_distances, "Rescore neighbours with exact distances");
  interp->add_option("--out", interp_out, "Output CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*synth) {
      write_store(make_synthetic_store(synth_spec), synth_out);
    } else if (*disp) {
      disp_cfg.regularizer = disp_reg == "mhe" ? Regularizer::kMhe : Regularizer::kSliced;
      const auto result = disperse(read_store(disp_in), disp_cfg);
      write_store(result.store, disp_out);
      if (!disp_trace.empty()) {
        auto out = open_out(disp_trace);
        write_trace_csv(out, result.trace);
      }
    } else if (*build) {
      build_index(read_store(build_in), build_cfg).save(build_out);
    } else if (*query) {
      const auto index = IvfPqIndex::load(query_index);
      const auto queries = read_store(query_file);
      const auto results = search_batch(index, queries.view(), query_k, query_nprobe);
      auto out = open_out(query_out);
      out << "query_id,rank,key_id,distance,label\n" << std::setprecision(10);
      for (std::size_t q = 0; q < results.size(); ++q) {
        const auto& hits = results[q].hits;
        for (std::size_t r = 0; r < hits.size(); ++r) {
          out << q << ',' << r << ',' << hits[r].key_id << ',' << hits[r].distance << ',' << hits[r].label << '\n';
        }
      }
    } else if (*bench) {
      const auto index = IvfPqIndex::load(bench_index);
      const auto source = bench_store.empty() ? reconstructed_store(index) : read_store(bench_store);
      const auto result = run_bench(index, source, bench_spec);
      const bool fresh = !fs::exists(bench_out) || fs::file_size(bench_out) == 0;
      auto out = open_out(bench_out, std::ios::app);
      if (fresh) write_bench_csv_header(out);
      write_bench_csv_row(out, bench_run_id, result);
      std::cout << "qps " << result.qps << " IF " << result.imbalance_factor << '\n';
    } else if (*analyze_cmd) {
      const auto index = IvfPqIndex::load(analyze_index);
      const auto report = analyze(index, read_store(analyze_store), analysis_opts);
      auto out = open_out(analyze_out);
      out << to_json(report) << '\n';
    } else if (*sweep) {
      const auto kappas = parse_list(sweep_kappas);
      sweep_build.seed = sweep_base.seed;
      sweep_bench.seed = sweep_base.seed;
      const auto rows = sweep_concentration(sweep_bench, kappas, sweep_base, sweep_build);
      auto out = open_out(sweep_out);
      write_sweep_csv_header(out);
      for (const auto& row : rows) write_sweep_csv_row(out, row);
    } else if (*interp) {
      const auto index = IvfPqIndex::load(interp_index);
      const auto store = read_store(interp_store);
      const auto queries = read_store(interp_queries);
      const auto probs = read_numeric_csv(interp_probs);
      if (probs.size() != queries.size()) {
        fail(Errc::kLengthMismatch, "model-probs has " + std::to_string(probs.size()) + " rows for " +
                                        std::to_string(queries.size()) + " queries");
      }
      auto out = open_out(interp_out);
      out << "query_id,token_id,probability\n" << std::setprecision(17);
      for (std::size_t q = 0; q < queries.size(); ++q) {
        const auto mixed = step_predict(index, store, queries.key(q), Distribution(probs[q]), interp_cfg);
        for (std::size_t t = 0; t < mixed.size(); ++t) out << q << ',' << t << ',' << mixed[t] << '\n';
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "dknn: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
