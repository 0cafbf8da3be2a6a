#pragma once

#include <utility>

#include "phmm/rng.hpp"
#include "phmm/sequence.hpp"

namespace phmm {

/// The built-in reference parameterization used throughout the benchmark
/// suite (K = M = 3).
HmmParams benchmark_params();

/// Samples n complete sequences of length T from the generative model
/// (z_1 ~ pi, z_{t+1} ~ A row z_t, y_t ~ B row z_t). Sequence i uses
/// rng.substream(i), so generation is reproducible per-sequence.
std::pair<Dataset, std::vector<std::vector<int>>> generate(const HmmParams& params, int n, int T,
                                                           const RngStream& rng);

/// Masks each position independently with probability p. Uses a substream
/// per sequence; pass a stream separate from the generator's so sweeps
/// over p reuse identical underlying data.
Dataset apply_random_missing(const Dataset& dataset, double p, const RngStream& rng);

/// Masks exactly one contiguous block of length round(T * p) per sequence,
/// with a uniformly chosen start; the block may touch either boundary.
Dataset apply_blockwise_missing(const Dataset& dataset, double p, const RngStream& rng);

}  // namespace phmm
