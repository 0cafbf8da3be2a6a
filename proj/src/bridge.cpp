#include "phmm/bridge.hpp"

namespace phmm {

std::vector<int> bridge_fill(int z_left, int z_right, int gap, const PowerCache& cache,
                             RngStream& rng) {
  if (gap < 2) return {};
  const int k = cache.dim();
  const Matrix& A = cache.base().matrix();
  std::vector<int> out(gap - 1);
  std::vector<double> w(k);
  int cur = z_left;
  for (int s = 0; s < gap - 1; ++s) {
    int remaining = gap - s;  // steps from cur to the right endpoint
    const Matrix& tail = cache.power(remaining - 1);
    double total = 0.0;
    for (int j = 0; j < k; ++j) {
      w[j] = A(cur, j) * tail(j, z_right);
      total += w[j];
    }
    if (!(total > 0.0))
      throw std::domain_error("bridge_fill: endpoints unreachable ((A^gap)_{ir} = 0)");
    double u = rng.uniform() * total;
    double acc = 0.0;
    int pick = k - 1;
    for (int j = 0; j < k; ++j) {
      acc += w[j];
      if (u < acc) {
        pick = j;
        break;
      }
    }
    out[s] = pick;
    cur = pick;
  }
  return out;
}

std::vector<std::vector<double>> chain_marginals(std::span<const double> pi, const Matrix& A,
                                                 int upto) {
  std::vector<std::vector<double>> m(upto + 1);
  m[0].assign(pi.begin(), pi.end());
  for (int s = 1; s <= upto; ++s) {
    m[s].resize(pi.size());
    row_times_matrix(m[s - 1], A, m[s]);
  }
  return m;
}

std::vector<int> reconstruct_full_path(const ObservedSequence& seq, const LatentDraw& z_obs,
                                       const HmmParams& params, const PowerCache& cache,
                                       RngStream& rng, int extra) {
  const int t_len = seq.length();
  const int k = params.num_states();
  const Matrix& A = params.A.matrix();
  std::vector<int> path(t_len + extra, -1);
  std::vector<double> w(k);

  auto draw_weighted = [&](std::span<const double> weights) {
    return rng.categorical(weights);
  };

  if (seq.fully_missing()) {
    if (t_len + extra == 0) return path;
    path[0] = draw_weighted(params.pi.span());
    for (int t = 1; t < t_len + extra; ++t) path[t] = draw_weighted(A.row(path[t - 1]));
    return path;
  }

  const auto& idx = seq.observed_index();
  if (static_cast<int>(z_obs.size()) != seq.num_observed())
    throw std::invalid_argument("reconstruct_full_path: latent draw length mismatch");
  for (size_t j = 0; j < idx.size(); ++j) path[idx[j]] = z_obs[j];

  // leading segment: backward draw against the pi-chain marginals
  int first = idx.front();
  if (first > 0) {
    auto marg = chain_marginals(params.pi.span(), A, first - 1);
    for (int t = first - 1; t >= 0; --t) {
      int next = path[t + 1];
      for (int i = 0; i < k; ++i) w[i] = marg[t][i] * A(i, next);
      path[t] = draw_weighted(w);
    }
  }

  // interior gaps via exact bridges
  for (size_t j = 0; j + 1 < idx.size(); ++j) {
    int gap = idx[j + 1] - idx[j];
    if (gap < 2) continue;
    auto mid = bridge_fill(z_obs[j], z_obs[j + 1], gap, cache, rng);
    for (int s = 0; s < gap - 1; ++s) path[idx[j] + 1 + s] = mid[s];
  }

  // trailing segment and forecast extension: unconditional simulation
  for (int t = idx.back() + 1; t < t_len + extra; ++t)
    path[t] = draw_weighted(A.row(path[t - 1]));

  return path;
}

}  // namespace phmm
