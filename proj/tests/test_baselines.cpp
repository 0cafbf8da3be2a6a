#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "phmm/baselines.hpp"
#include "phmm/diagnostics.hpp"
#include "phmm/simulation.hpp"

using namespace phmm;

TEST_CASE("fully missing input makes the full-path draw a prior chain draw") {
  auto params = benchmark_params();
  std::vector<int> entries(6, kMissing);
  Matrix alpha;
  std::vector<double> log_norms;
  double ll = forward_full(entries, params, alpha, log_norms);
  CHECK(ll == doctest::Approx(0.0).epsilon(1e-12));  // likelihood is flat

  RngStream rng(1, 0);
  const int n = 100000;
  std::vector<double> first(3, 0.0);
  Matrix trans_freq(3, 3);
  for (int i = 0; i < n; ++i) {
    auto path = backward_sample_full(alpha, params, rng);
    first[path[0]] += 1.0 / n;
    for (size_t t = 0; t + 1 < path.size(); ++t) trans_freq(path[t], path[t + 1]) += 1.0;
  }
  for (int z = 0; z < 3; ++z) {
    double p = params.pi[z];
    CHECK(std::abs(first[z] - p) < 3.0 * std::sqrt(p * (1 - p) / n) + 1e-3);
  }
  for (int i = 0; i < 3; ++i) {
    double row_total = 0.0;
    for (int j = 0; j < 3; ++j) row_total += trans_freq(i, j);
    for (int j = 0; j < 3; ++j)
      CHECK(std::abs(trans_freq(i, j) / row_total - params.A(i, j)) < 0.01);
  }
}

TEST_CASE("partial and collapsed forward passes agree on the marginal likelihood") {
  RngStream rng(2, 0);
  for (int rep = 0; rep < 50; ++rep) {
    int k = 2 + rng.uniform_int(2), m = 2 + rng.uniform_int(2), t_len = 3 + rng.uniform_int(5);
    auto params = oracles::random_params(k, m, rng);
    auto entries = oracles::random_entries(t_len, m, 0.5, rng);
    ObservedSequence seq(entries);

    Matrix alpha;
    std::vector<double> log_norms;
    double ll_full = forward_full(entries, params, alpha, log_norms);

    std::set<int> gaps{1};
    for (int g : seq.gaps()) gaps.insert(g);
    if (seq.leading_offset() > 0) gaps.insert(seq.leading_offset());
    PowerCache cache = build_cache(params.A, gaps);
    double ll_collapsed = collapsed_forward(seq, params, cache).loglik();

    CHECK(std::abs(ll_full - ll_collapsed) <= 1e-10 * std::max(1.0, std::abs(ll_full)));
  }
}

TEST_CASE("per-iteration latent work: full samplers touch n*T, collapsed touches observed only") {
  RngStream gen(3, 0);
  auto truth = benchmark_params();
  auto [complete, latents] = generate(truth, 25, 14, gen);
  Dataset ds = apply_random_missing(complete, 0.5, RngStream(3, 1));
  Priors priors = Priors::flat(3, 3);
  SamplerConfig cfg;
  cfg.iterations = 5;
  cfg.burn_in = 0;
  cfg.seed = 4;
  cfg.accumulate_state_counts = false;

  CHECK(run_vanilla_gibbs(ds, priors, cfg).z_steps_per_iter == 25ull * 14);
  CHECK(run_partially_collapsed_gibbs(ds, priors, cfg).z_steps_per_iter == 25ull * 14);
  CHECK(run_collapsed_gibbs(ds, priors, cfg).z_steps_per_iter ==
        static_cast<uint64_t>(ds.total_observed()));
}

TEST_CASE("all three samplers agree at p = 0 within Monte Carlo error") {
  RngStream gen(5, 0);
  auto truth = benchmark_params();
  auto [ds, latents] = generate(truth, 80, 12, gen);
  Priors priors = Priors::flat(3, 3);
  SamplerConfig cfg;
  cfg.iterations = 1500;
  cfg.burn_in = 500;
  cfg.seed = 6;
  cfg.accumulate_state_counts = false;

  auto mean_of = [&](const ChainTrace& t) { return posterior_mean(t); };
  PosteriorMean mc = mean_of(run_collapsed_gibbs(ds, priors, cfg));
  PosteriorMean mp = mean_of(run_partially_collapsed_gibbs(ds, priors, cfg));
  PosteriorMean mv = mean_of(run_vanilla_gibbs(ds, priors, cfg));

  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      CHECK(std::abs(mc.A(i, j) - mp.A(i, j)) < 0.02);
      CHECK(std::abs(mv.A(i, j) - mp.A(i, j)) < 0.02);
      CHECK(std::abs(mc.B(i, j) - mp.B(i, j)) < 0.02);
      CHECK(std::abs(mv.B(i, j) - mp.B(i, j)) < 0.02);
    }
}

TEST_CASE("vanilla imputation with identity emissions reinforces the identity") {
  // with B = identity every imputed y_m equals its latent state, so the
  // posterior of B stays concentrated on the diagonal
  Matrix eye = Matrix::identity(3);
  HmmParams truth(benchmark_params().pi, benchmark_params().A, StochasticMatrix::normalized(eye));
  RngStream gen(7, 0);
  auto [complete, latents] = generate(truth, 60, 12, gen);
  Dataset ds = apply_random_missing(complete, 0.3, RngStream(7, 1));
  Priors priors = Priors::flat(3, 3);
  SamplerConfig cfg;
  cfg.iterations = 600;
  cfg.burn_in = 300;
  cfg.seed = 8;
  cfg.accumulate_state_counts = false;
  ChainTrace trace = run_vanilla_gibbs(ds, priors, cfg, truth);
  PosteriorMean mean = posterior_mean(trace);
  for (int i = 0; i < 3; ++i) CHECK(mean.B(i, i) > 0.8);
}

TEST_CASE("EM recovers a near-deterministic model from complete data") {
  Matrix a(3, 3, 0.025), b(3, 3, 0.025);
  for (int i = 0; i < 3; ++i) {
    a(i, (i + 1) % 3) = 0.95;
    b(i, i) = 0.95;
  }
  HmmParams truth(Simplex({0.9, 0.05, 0.05}), StochasticMatrix::normalized(a),
                  StochasticMatrix::normalized(b));
  RngStream gen(9, 0);
  auto [ds, latents] = generate(truth, 500, 20, gen);
  EmResult em = run_em(ds, std::nullopt, 300, 1e-7, 11);

  auto perm = align_labels(em.params.B.matrix(), truth.B.matrix());
  double mse = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double d = em.params.A(perm[i], perm[j]) - truth.A(i, j);
      mse += d * d / 9.0;
    }
  CHECK(mse < 0.01);
}

TEST_CASE("EM started at the truth barely moves on a large sample") {
  auto truth = benchmark_params();
  RngStream gen(10, 0);
  auto [ds, latents] = generate(truth, 5000, 20, gen);
  EmResult em = run_em(ds, truth, 1, 1e-300, 0);  // exactly one M-step
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      CHECK(std::abs(em.params.A(i, j) - truth.A(i, j)) < 0.02);
      CHECK(std::abs(em.params.B(i, j) - truth.B(i, j)) < 0.02);
    }
}

TEST_CASE("EM log-likelihood trace is non-decreasing") {
  RngStream rng(12, 0);
  for (int rep = 0; rep < 10; ++rep) {
    int k = 2 + rng.uniform_int(2), m = 2 + rng.uniform_int(2);
    auto gen_params = oracles::random_params(k, m, rng);
    RngStream gen(13 + rep, 0);
    auto [complete, latents] = generate(gen_params, 30, 10, gen);
    Dataset ds = apply_random_missing(complete, 0.3 + 0.05 * (rep % 5), RngStream(14 + rep, 1));
    EmResult em = run_em(ds, std::nullopt, 60, 1e-9, 100 + rep);
    for (size_t i = 1; i < em.loglik_trace.size(); ++i)
      CHECK(em.loglik_trace[i] >= em.loglik_trace[i - 1] - 1e-10);
  }
}

TEST_CASE("viterbi decodes a deterministic chain exactly") {
  Matrix a(2, 2), b = Matrix::identity(2);
  a(0, 1) = 1.0;
  a(1, 0) = 1.0;
  HmmParams params(Simplex({1.0, 0.0}), StochasticMatrix::normalized(a),
                   StochasticMatrix::normalized(b));
  Dataset ds({ObservedSequence(std::vector<int>{0, 1, 0, kMissing, 0, 1})}, 2, 2);
  auto paths = viterbi_decode(ds, params);
  CHECK(paths[0] == std::vector<int>{0, 1, 0, 1, 0, 1});
}
