#include "phmm/benchmark.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>
#include <future>

#include "phmm/baselines.hpp"

namespace phmm {

namespace {

SamplerKind kind_of(const std::string& name) {
  if (name == "collapsed") return SamplerKind::Collapsed;
  if (name == "partial") return SamplerKind::Partial;
  if (name == "vanilla") return SamplerKind::Vanilla;
  throw std::invalid_argument("unknown sampler: " + name);
}

BenchmarkRow run_cell(const BenchmarkOptions& opts, const std::string& sampler, double p,
                      uint64_t rep_seed, const Dataset& masked, const GroundTruth& truth) {
  BenchmarkRow row{sampler, p, rep_seed, {}};
  Priors priors = Priors::flat(masked.num_states(), masked.num_symbols());
  if (sampler == "em") {
    auto t0 = std::chrono::steady_clock::now();
    EmResult em = run_em(masked, std::nullopt, opts.iterations, 1e-6, rep_seed);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    row.report = report_em(em, masked, truth, secs);
    return row;
  }
  SamplerConfig config;
  config.iterations = opts.iterations;
  config.burn_in = opts.burn_in;
  config.thin = opts.thin;
  config.mh_concentration = opts.mh_concentration;
  config.mh_repeats = opts.mh_repeats;
  config.kernel = opts.mh_proposal == "walk" ? ProposalKernel::RandomWalk
                                             : ProposalKernel::Surrogate;
  config.seed = rep_seed;
  ChainTrace trace = run_sampler(kind_of(sampler), masked, priors, config);
  row.report = report(trace, truth);
  return row;
}

}  // namespace

std::vector<BenchmarkRow> run_benchmark(const BenchmarkOptions& opts) {
  if (opts.missing != "random" && opts.missing != "block")
    throw std::invalid_argument("run_benchmark: missing mechanism must be random or block");

  // one complete dataset per replicate; p varies only the mask, so cells
  // within a replicate are paired
  const size_t n_p = opts.p_grid.size();
  std::vector<Dataset> masked_sets;  // index rep * n_p + p_index
  std::vector<GroundTruth> truths;   // index rep
  std::vector<uint64_t> rep_seeds;
  masked_sets.reserve(opts.replicates * n_p);
  for (int rep = 0; rep < opts.replicates; ++rep) {
    uint64_t seed = opts.seed + static_cast<uint64_t>(rep);
    rep_seeds.push_back(seed);
    RngStream value_stream(seed, 1);
    auto [complete, latents] = generate(opts.params, opts.n, opts.T, value_stream);
    truths.push_back(GroundTruth{opts.params, std::move(latents)});
    for (size_t pi = 0; pi < n_p; ++pi) {
      RngStream mask_stream(seed, 2 + pi);
      masked_sets.push_back(opts.missing == "random"
                                ? apply_random_missing(complete, opts.p_grid[pi], mask_stream)
                                : apply_blockwise_missing(complete, opts.p_grid[pi], mask_stream));
    }
  }

  struct Cell {
    int rep;
    size_t p_index;
    std::string sampler;
  };
  std::vector<Cell> cells;
  for (int rep = 0; rep < opts.replicates; ++rep)
    for (size_t pi = 0; pi < n_p; ++pi)
      for (const auto& s : opts.samplers) cells.push_back({rep, pi, s});

  auto run_one = [&](const Cell& c) {
    return run_cell(opts, c.sampler, opts.p_grid[c.p_index], rep_seeds[c.rep],
                    masked_sets[c.rep * n_p + c.p_index], truths[c.rep]);
  };

  std::vector<BenchmarkRow> rows(cells.size());
  const int jobs = std::max(1, opts.jobs);
  if (jobs == 1) {
    for (size_t c = 0; c < cells.size(); ++c) rows[c] = run_one(cells[c]);
  } else {
    for (size_t base = 0; base < cells.size(); base += jobs) {
      std::vector<std::future<BenchmarkRow>> batch;
      for (size_t c = base; c < std::min(cells.size(), base + jobs); ++c)
        batch.push_back(std::async(std::launch::async, [&run_one, &cells, c] { return run_one(cells[c]); }));
      for (size_t b = 0; b < batch.size(); ++b) rows[base + b] = batch[b].get();
    }
  }
  return rows;
}

void save_benchmark_csv(const std::string& path, const std::vector<BenchmarkRow>& rows,
                        const std::vector<std::string>& comments) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  for (const auto& c : comments) out << c << "\n";
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };
  auto cell = [&fmt](const std::optional<double>& v) { return v ? fmt(*v) : std::string(); };
  out << "sampler,p,seed,time_per_1000_iters,median_ess_per_iter,median_ess_per_sec,"
         "init_mse,trans_mse,emis_mse,latent_accuracy\n";
  for (const auto& r : rows) {
    char pbuf[32];
    std::snprintf(pbuf, sizeof(pbuf), "%g", r.p);
    out << r.sampler << "," << pbuf << "," << r.seed << "," << fmt(r.report.time_per_1000_iters)
        << "," << cell(r.report.median_ess_per_iter) << "," << cell(r.report.median_ess_per_sec)
        << "," << cell(r.report.init_mse) << "," << cell(r.report.trans_mse) << ","
        << cell(r.report.emis_mse) << "," << cell(r.report.latent_accuracy) << "\n";
  }
}

}  // namespace phmm
