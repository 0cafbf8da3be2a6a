#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "phmm/model.hpp"

namespace phmm {

/// Proposal family for the non-conjugate A and pi updates.
///
/// Surrogate: independence draws from Dirichlet(eta + one-step pair
/// counts), the conjugate posterior the statistics would imply if every
/// observed pair were one step apart. It depends on z_o only, is exact in
/// the gap-free case, and makes global moves, so the update stays close
/// to a direct conditional draw at every missing rate.
///
/// RandomWalk: Dirichlet centered at the current row with concentration
/// mh_concentration; local moves, useful as a reference kernel.
enum class ProposalKernel { Surrogate, RandomWalk };

struct SamplerConfig {
  int iterations = 5000;
  int burn_in = 2500;
  int thin = 1;
  ProposalKernel kernel = ProposalKernel::Surrogate;
  double mh_concentration = 200.0;  // random-walk proposal concentration
  int mh_repeats = 8;               // Metropolis sweeps per Gibbs iteration
  uint64_t seed = 0;
  bool record_latents = false;           // keep per-draw z_o in the trace
  bool accumulate_state_counts = true;   // per-position state tallies for majority vote

  void validate() const {
    if (iterations < 1) throw std::invalid_argument("SamplerConfig: iterations must be >= 1");
    if (burn_in < 0 || burn_in >= iterations)
      throw std::invalid_argument("SamplerConfig: require 0 <= burn_in < iterations");
    if (thin < 1) throw std::invalid_argument("SamplerConfig: thin must be >= 1");
    if (!(mh_concentration > 0.0))
      throw std::invalid_argument("SamplerConfig: mh_concentration must be positive");
    if (mh_repeats < 1 || mh_repeats > 200)
      throw std::invalid_argument("SamplerConfig: mh_repeats must be in [1, 200]");
  }

  int retained_count() const { return (iterations - burn_in) / thin; }
};

struct RetainedDraw {
  int iter = 0;  // 1-based iteration that produced the draw
  HmmParams params;
  double loglik = 0.0;
  double ms_forward = 0.0;
  double ms_params = 0.0;
  std::vector<std::vector<int>> latents;  // optional z_o per sequence
};

/// Posterior draws plus per-iteration instrumentation from one sampler run.
struct ChainTrace {
  int num_states = 0;
  int num_symbols = 0;
  std::string sampler;
  SamplerConfig config;

  std::vector<RetainedDraw> draws;

  // per-iteration phase times, all iterations including burn-in
  std::vector<double> iter_ms_forward;
  std::vector<double> iter_ms_params;

  // Metropolis-Hastings accepted-proposal counts, one row per iteration
  // with stride K+1 (K transition rows then pi); each cell counts accepts
  // over the iteration's mh_repeats sweeps.
  std::vector<uint8_t> mh_accepts;
  int mh_stride = 0;

  // inner-loop positions touched by the latent-update phase, per iteration
  uint64_t z_steps_per_iter = 0;

  // retained-draw state tallies per sequence: length T*K, index t*K + z
  std::vector<std::vector<int>> latent_state_counts;

  bool conjugate_transition_path = false;
  bool conjugate_initial_path = false;

  double total_ms_forward() const {
    double s = 0.0;
    for (double v : iter_ms_forward) s += v;
    return s;
  }
  double total_ms_params() const {
    double s = 0.0;
    for (double v : iter_ms_params) s += v;
    return s;
  }
  /// Sampler cost in milliseconds: latent phase + parameter phase + cache
  /// rebuilds; excludes trace accumulation and I/O.
  double sampling_ms() const { return total_ms_forward() + total_ms_params(); }

  /// Fraction of accepted proposals for one update slot (A row or pi).
  double mh_acceptance_rate(int slot) const {
    if (mh_stride == 0 || mh_accepts.empty()) return 0.0;
    size_t n = mh_accepts.size() / mh_stride;
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += mh_accepts[i * mh_stride + slot];
    return s / static_cast<double>(n) / config.mh_repeats;
  }
};

}  // namespace phmm
