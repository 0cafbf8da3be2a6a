#pragma once

#include "phmm/bridge.hpp"

namespace phmm {

/// Posterior-predictive latent paths: per requested draw, a retained theta
/// is picked uniformly from the trace, the full latent path is
/// reconstructed (collapsed FFBS at observed anchors, exact bridges in the
/// gaps), and the chain is advanced another W steps. Paths have length
/// T + W.
std::vector<std::vector<int>> forecast(const ChainTrace& trace, const ObservedSequence& seq, int W,
                                       int draws, RngStream& rng);

/// Latent decoding of a new sequence under the posterior: per draw, theta
/// from the trace, then collapsed forward + backward sampling on the new
/// sequence. Returns draws of z at the observed positions.
std::vector<LatentDraw> decode_new(const ChainTrace& trace, const ObservedSequence& new_seq,
                                   int draws, RngStream& rng);

/// Draws from p(y_m | y_o): theta from the trace, latent path via FFBS and
/// bridges, missing symbols from the emission rows.
struct ImputationDraws {
  std::vector<int> missing_positions;
  std::vector<std::vector<int>> symbols;  // draws x missing_positions

  /// Per-position counts of imputed symbols, each summing to draws.
  std::vector<std::vector<int>> histograms(int num_symbols) const;
  /// Most frequent imputed symbol per position (ties to lowest index).
  std::vector<int> modes(int num_symbols) const;
};

ImputationDraws impute_missing(const ChainTrace& trace, const ObservedSequence& seq, int draws,
                               RngStream& rng);

}  // namespace phmm
