#pragma once

#include <set>
#include <stdexcept>
#include <vector>

#include "phmm/simplex.hpp"

namespace phmm {

/// Thrown when a gap power is requested that was not declared at build
/// time. Callers must pre-declare the gap set they will touch.
struct CacheMiss : std::out_of_range {
  using std::out_of_range::out_of_range;
};

/// Powers A^k of one row-stochastic transition matrix, built by ascending
/// incremental multiplication (A^k = A^{k-1} * A), which keeps the
/// floating-point result independent of the declared gap set. A built
/// cache is immutable and shareable; it is only valid for the matrix it
/// was built from and must be rebuilt whenever A is resampled.
class PowerCache {
 public:
  PowerCache(const StochasticMatrix& base, const std::set<int>& needed_gaps);

  /// Overwrites the table with powers of a new base; declared gaps keep.
  void rebuild(const StochasticMatrix& base);

  const StochasticMatrix& base() const { return base_; }
  int dim() const { return base_.rows(); }
  int max_power() const { return max_power_; }

  bool contains(int k) const { return declared_.count(k) > 0; }
  const std::set<int>& declared_gaps() const { return declared_; }

  /// A^k for a declared k >= 1; table[1] is the base itself, exactly.
  const Matrix& power(int k) const {
    if (!contains(k)) throw CacheMiss("PowerCache: power " + std::to_string(k) + " not declared");
    return powers_[k - 1];
  }

  /// (A^k)_{i,j}: probability of moving from state i to state j in exactly
  /// k steps with the intermediate states marginalized out.
  double gap_transition(int k, int i, int j) const { return power(k)(i, j); }

 private:
  StochasticMatrix base_;
  std::set<int> declared_;
  int max_power_ = 0;
  std::vector<Matrix> powers_;  // powers_[k-1] = A^k, k = 1..max_power_
};

/// Builds the cache for every gap in needed_gaps (k = 1 is always
/// available since it equals the base).
PowerCache build_cache(const StochasticMatrix& A, const std::set<int>& needed_gaps);

double gap_transition(const PowerCache& cache, int k, int i, int j);

/// pi^T A^k: marginal distribution of the first observed latent state when
/// k missing positions precede it. k = 0 returns pi unchanged.
Simplex initial_gap_vector(const Simplex& pi, const PowerCache& cache, int k);

}  // namespace phmm
