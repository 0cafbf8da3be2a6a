#pragma once

#include <optional>

#include "phmm/collapsed.hpp"

namespace phmm {

/// Classical scaled forward pass over all T positions; missing entries
/// contribute emission factor 1. Fills alpha (T x K, rows normalized) and
/// the per-step log normalizers; returns log p(y_o | theta).
double forward_full(std::span<const int> entries, const HmmParams& params, Matrix& alpha,
                    std::vector<double>& log_norms);

/// Backward draw of the full latent path from a forward_full table.
std::vector<int> backward_sample_full(const Matrix& alpha, const HmmParams& params, RngStream& rng);

/// Data-augmentation Gibbs: cycles y_m | z, theta (single-site emission
/// draws), theta | y, z (fully conjugate, emission counts include imputed
/// values), z | theta, y (full-path FFBS treating imputed values as data).
ChainTrace run_vanilla_gibbs(const Dataset& dataset, const Priors& priors,
                             const SamplerConfig& config,
                             const std::optional<HmmParams>& init = std::nullopt);

/// Gibbs with y_m integrated out: full-path FFBS with emission factor 1 at
/// missing positions, conjugate theta updates with emission counts from
/// observed positions only.
ChainTrace run_partially_collapsed_gibbs(const Dataset& dataset, const Priors& priors,
                                         const SamplerConfig& config,
                                         const std::optional<HmmParams>& init = std::nullopt);

struct EmResult {
  HmmParams params;
  std::vector<double> loglik_trace;  // log p(y_o | theta_i), non-decreasing
  int iterations = 0;
  bool converged = false;
};

/// Baum-Welch with missing observations scored as emission 1. The M-step
/// smooths zero expected-count rows by 1e-6 before normalizing. Runs until
/// |delta loglik| < tol or max_iters.
EmResult run_em(const Dataset& dataset, const std::optional<HmmParams>& init, int max_iters = 500,
                double tol = 1e-6, uint64_t seed = 0);

/// Most probable latent path per sequence (missing emissions scored 1).
std::vector<std::vector<int>> viterbi_decode(const Dataset& dataset, const HmmParams& params);

}  // namespace phmm
