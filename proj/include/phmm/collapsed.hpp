#pragma once

#include <optional>
#include <utility>

#include "phmm/power_cache.hpp"
#include "phmm/rng.hpp"
#include "phmm/sequence.hpp"
#include "phmm/trace.hpp"

namespace phmm {

/// Scaled forward values over the observed positions of one sequence.
/// Row k holds alpha-hat at observed index t_k (each row sums to 1) and
/// log_norms[k] the log of that step's normalizer, so the log marginal
/// likelihood log p(y_o | theta) is the sum of log_norms.
struct ForwardTable {
  Matrix alpha;                   // num_observed x K
  std::vector<double> log_norms;  // per observed step

  int num_observed() const { return alpha.rows(); }
  double loglik() const {
    double s = 0.0;
    for (double v : log_norms) s += v;
    return s;
  }
};

/// One sequence's sampled latent states aligned to observed_index.
using LatentDraw = std::vector<int>;

/// Forward recursion over observed indices only (K_obs steps, not T).
/// The cache must cover the sequence's gaps and its leading offset when
/// positive. A fully missing sequence yields an empty table (loglik 0).
ForwardTable collapsed_forward(const ObservedSequence& seq, const HmmParams& params,
                               const PowerCache& cache);

/// Exact draw from p(z_o | y_o, theta) by backward sampling through the
/// forward table.
LatentDraw backward_sample(const ForwardTable& table, const ObservedSequence& seq,
                           const HmmParams& params, const PowerCache& cache, RngStream& rng);

/// Sufficient statistics of one latent draw for the parameter updates:
/// transition pair counts keyed by gap length, first-observed-state counts
/// keyed by leading offset, and emission pair counts.
struct LatentStats {
  int num_states = 0;
  int max_gap = 0;     // largest gap with any count
  int max_offset = 0;  // largest leading offset with any count
  std::vector<std::vector<long>> gap_counts;     // [gap] -> K*K counts (i*K + j)
  std::vector<std::vector<long>> offset_counts;  // [offset] -> K counts
  std::vector<long> emission_counts;             // K*M counts (i*M + j)

  LatentStats(int num_states, int num_symbols, int max_gap, int max_offset);
  void clear();
  void add_sequence(const ObservedSequence& seq, const LatentDraw& draw);

  static LatentStats collect(const Dataset& dataset, const std::vector<LatentDraw>& latents);
};

/// Collapsed log-likelihood of the latent statistics as a function of the
/// transition matrix: sum over gaps of n_ij log (A^gap)_ij plus, when
/// include_offsets, the leading terms m_z log (pi^T A^offset)_z. Powers of
/// A are recomputed into `scratch`.
double transition_loglik(const LatentStats& stats, const Matrix& A, std::span<const double> pi,
                         bool include_offsets, std::vector<Matrix>& scratch);

/// Log-likelihood of the leading-offset terms as a function of pi, using
/// cached powers of the current A (offset 0 terms are log pi_z).
double initial_loglik(const LatentStats& stats, std::span<const double> pi, const PowerCache& cache);

/// Log density of Dirichlet(alpha) at x (shared support assumed).
double dirichlet_log_pdf(std::span<const double> x, std::span<const double> alpha);

/// out ~ Dirichlet(eta + counts); counts may be null for a prior draw.
void posterior_dirichlet_row(std::span<const double> eta, const long* counts, RngStream& rng,
                             std::span<double> out);

/// Log MH acceptance ratio for replacing row `row` of A by `proposal`
/// under the collapsed target (zero for the degenerate proposal).
double transition_row_log_ratio(const LatentStats& stats, const Matrix& A, int row,
                                std::span<const double> proposal, std::span<const double> pi,
                                const Priors& priors, const SamplerConfig& config);

/// Log MH acceptance ratio for replacing pi by `proposal`.
double initial_log_ratio(const LatentStats& stats, std::span<const double> pi,
                         std::span<const double> proposal, const PowerCache& cache,
                         const Priors& priors, const SamplerConfig& config);

/// Conjugate update of the emission matrix: row i ~ Dir(eta_B[i] + n_i)
/// with counts taken from observed positions only.
StochasticMatrix update_emission(const Dataset& dataset, const std::vector<LatentDraw>& latents,
                                 const Priors& priors, RngStream& rng);

/// Metropolis-within-Gibbs sweep over the rows of A under the collapsed
/// target. Proposals are Dirichlet(mh_concentration * row) with the
/// asymmetric-proposal correction; rows are updated one at a time and the
/// cache is rebuilt after each accepted row. Returns the new matrix and
/// per-row acceptance flags.
std::pair<StochasticMatrix, std::vector<uint8_t>> update_transition_mh(
    const Dataset& dataset, const std::vector<LatentDraw>& latents, const StochasticMatrix& A,
    const Simplex& pi, const Priors& priors, const SamplerConfig& config, PowerCache& cache,
    RngStream& rng);

/// Metropolis update of pi under the collapsed target (prior times the
/// leading-offset factors). When every sequence is observed at position 1
/// the conditional is conjugate and is drawn exactly instead.
std::pair<Simplex, uint8_t> update_initial_mh(const Dataset& dataset,
                                              const std::vector<LatentDraw>& latents,
                                              const Simplex& pi, const Priors& priors,
                                              const SamplerConfig& config, const PowerCache& cache,
                                              RngStream& rng);

/// Full collapsed Gibbs run (latent FFBS over observed indices, conjugate
/// emission update, MH or conjugate transition/initial updates), returning
/// the retained, thinned trace.
ChainTrace run_collapsed_gibbs(const Dataset& dataset, const Priors& priors,
                               const SamplerConfig& config,
                               const std::optional<HmmParams>& init = std::nullopt);

/// Draws a parameter set from the priors (the default initialization).
HmmParams draw_from_priors(const Priors& priors, RngStream& rng);

}  // namespace phmm
