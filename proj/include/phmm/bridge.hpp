#pragma once

#include "phmm/collapsed.hpp"

namespace phmm {

/// Exact draw of the gap - 1 intermediate states of a Markov bridge from
/// z_left to z_right over `gap` steps:
///   p(z_{s+1} = j | z_s = i, endpoint r at distance d) =
///     A_{ij} (A^{d-1})_{jr} / (A^d)_{ir}.
/// Requires powers 1..gap-1 in the cache. Throws std::domain_error when the
/// endpoint pair is unreachable ((A^gap)_{ir} = 0).
std::vector<int> bridge_fill(int z_left, int z_right, int gap, const PowerCache& cache,
                             RngStream& rng);

/// Marginals of a pi-initialized chain: result[s] = pi^T A^s for
/// s = 0..upto (result[0] = pi).
std::vector<std::vector<double>> chain_marginals(std::span<const double> pi, const Matrix& A,
                                                 int upto);

/// Reconstructs a full latent path for one sequence given its observed-index
/// draw: interior gaps via bridge_fill, the leading segment by backward
/// sampling against the pi-chain marginals, the trailing segment by forward
/// simulation. A fully missing sequence is a prior chain draw. `extra`
/// appends that many forecast steps past position T.
std::vector<int> reconstruct_full_path(const ObservedSequence& seq, const LatentDraw& z_obs,
                                       const HmmParams& params, const PowerCache& cache,
                                       RngStream& rng, int extra = 0);

}  // namespace phmm
