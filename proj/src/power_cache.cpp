#include "phmm/power_cache.hpp"

#include <cmath>

namespace phmm {

PowerCache::PowerCache(const StochasticMatrix& base, const std::set<int>& needed_gaps)
    : base_(base) {
  if (base.rows() != base.cols()) throw std::invalid_argument("PowerCache: base must be square");
  if (needed_gaps.empty()) throw std::invalid_argument("PowerCache: needed_gaps is empty");
  for (int k : needed_gaps)
    if (k < 1) throw std::invalid_argument("PowerCache: gaps must be >= 1");
  declared_ = needed_gaps;
  declared_.insert(1);
  max_power_ = *declared_.rbegin();
  rebuild(base);
}

void PowerCache::rebuild(const StochasticMatrix& base) {
  if (base.rows() != base_.rows() || base.cols() != base_.cols())
    throw std::invalid_argument("PowerCache: rebuild with different dimensions");
  base_ = base;
  powers_.resize(max_power_);
  powers_[0] = base_.matrix();
  for (int k = 2; k <= max_power_; ++k) multiply_into(powers_[k - 2], base_.matrix(), powers_[k - 1]);
}

PowerCache build_cache(const StochasticMatrix& A, const std::set<int>& needed_gaps) {
  return PowerCache(A, needed_gaps);
}

double gap_transition(const PowerCache& cache, int k, int i, int j) {
  return cache.gap_transition(k, i, j);
}

Simplex initial_gap_vector(const Simplex& pi, const PowerCache& cache, int k) {
  if (k < 0) throw std::invalid_argument("initial_gap_vector: negative exponent");
  if (k == 0) return pi;
  if (pi.size() != cache.dim()) throw std::invalid_argument("initial_gap_vector: dimension mismatch");
  std::vector<double> out(pi.size());
  row_times_matrix(pi.span(), cache.power(k), out);
  return Simplex::normalized(std::move(out));
}

}  // namespace phmm
