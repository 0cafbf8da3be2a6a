#pragma once

#include <optional>

#include "phmm/baselines.hpp"

namespace phmm {

/// Efficiency and accuracy summary of one run; MSE/accuracy fields are
/// present only when a ground truth was supplied, ESS fields only for
/// sampler (not EM) runs.
struct SamplerReport {
  std::string sampler;
  std::optional<double> median_ess_per_iter;
  std::optional<double> median_ess_per_sec;
  double time_per_1000_iters = 0.0;  // seconds
  std::optional<double> init_mse;
  std::optional<double> trans_mse;
  std::optional<double> emis_mse;
  std::optional<double> latent_accuracy;
  std::optional<double> cv_prediction_accuracy;
};

/// Effective sample size N / (1 + 2 sum rho_k) with Geyer's initial
/// positive-sequence truncation of the paired autocorrelations, clipped to
/// [0, N]. A constant series counts as fully independent (ESS = N).
double ess(std::span<const double> series);

/// State permutation minimizing the emission-matrix MSE against the truth
/// (trace label sigma[i] plays truth state i). K <= 5 enforced.
std::vector<int> align_labels(const Matrix& emis_estimate, const Matrix& emis_truth);

/// Posterior means of the retained draws, as raw matrices.
struct PosteriorMean {
  std::vector<double> pi;
  Matrix A;
  Matrix B;
};
PosteriorMean posterior_mean(const ChainTrace& trace);

/// Builds the report from a trace: median ESS over the free parameter
/// coordinates, timing summaries, and when truth is given the
/// label-aligned MSEs plus majority-vote latent accuracy.
SamplerReport report(const ChainTrace& trace, const std::optional<GroundTruth>& truth);

/// Report for an EM fit: point-estimate MSEs and Viterbi latent accuracy.
SamplerReport report_em(const EmResult& em, const Dataset& dataset,
                        const std::optional<GroundTruth>& truth, double wall_seconds);

enum class SamplerKind { Collapsed, Partial, Vanilla };

ChainTrace run_sampler(SamplerKind kind, const Dataset& dataset, const Priors& priors,
                       const SamplerConfig& config,
                       const std::optional<HmmParams>& init = std::nullopt);

/// Masks `mask_fraction` of the observed entries, refits, imputes the
/// masked entries by posterior mode, and returns the fraction recovered,
/// averaged over `folds` independent masks.
double cross_validated_accuracy(const Dataset& dataset, SamplerKind kind,
                                const SamplerConfig& config, double mask_fraction, int folds,
                                const RngStream& rng, int impute_draws = 200);

}  // namespace phmm
