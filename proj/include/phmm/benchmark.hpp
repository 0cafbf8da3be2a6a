#pragma once

#include "phmm/diagnostics.hpp"
#include "phmm/simulation.hpp"

namespace phmm {

struct BenchmarkOptions {
  HmmParams params = benchmark_params();
  int n = 500;
  int T = 20;
  std::string missing = "random";  // random | block
  std::vector<double> p_grid = {0.0, 0.1, 0.3, 0.5, 0.7, 0.9};
  std::vector<std::string> samplers = {"collapsed", "partial", "vanilla"};
  int iterations = 5000;
  int burn_in = 2500;
  int thin = 1;
  double mh_concentration = 200.0;
  int mh_repeats = 8;
  std::string mh_proposal = "surrogate";  // surrogate | walk
  uint64_t seed = 0;
  int replicates = 1;
  int jobs = 1;
};

struct BenchmarkRow {
  std::string sampler;
  double p = 0.0;
  uint64_t seed = 0;
  SamplerReport report;
};

/// Runs the full sweep. Within one replicate every (sampler, p) cell sees
/// the same underlying complete dataset and the same mask, so comparisons
/// across p and samplers are paired.
std::vector<BenchmarkRow> run_benchmark(const BenchmarkOptions& opts);

void save_benchmark_csv(const std::string& path, const std::vector<BenchmarkRow>& rows,
                        const std::vector<std::string>& comments);

}  // namespace phmm
