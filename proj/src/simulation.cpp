#include "phmm/simulation.hpp"

#include <cmath>

namespace phmm {

HmmParams benchmark_params() {
  Matrix a(3, 3), b(3, 3);
  double a_rows[3][3] = {{0.6, 0.3, 0.1}, {0.1, 0.6, 0.3}, {0.3, 0.1, 0.6}};
  double b_rows[3][3] = {{0.8, 0.1, 0.1}, {0.1, 0.8, 0.1}, {0.1, 0.1, 0.8}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      a(i, j) = a_rows[i][j];
      b(i, j) = b_rows[i][j];
    }
  return HmmParams(Simplex({0.6, 0.3, 0.1}), StochasticMatrix(std::move(a)),
                   StochasticMatrix(std::move(b)));
}

std::pair<Dataset, std::vector<std::vector<int>>> generate(const HmmParams& params, int n, int T,
                                                           const RngStream& rng) {
  if (n < 1 || T < 1) throw std::invalid_argument("generate: n and T must be >= 1");
  const Matrix& A = params.A.matrix();
  const Matrix& B = params.B.matrix();
  std::vector<ObservedSequence> seqs;
  std::vector<std::vector<int>> latents(n);
  seqs.reserve(n);
  for (int i = 0; i < n; ++i) {
    RngStream r = rng.substream(i);
    std::vector<int> z(T), y(T);
    z[0] = r.categorical(params.pi.span());
    y[0] = r.categorical(B.row(z[0]));
    for (int t = 1; t < T; ++t) {
      z[t] = r.categorical(A.row(z[t - 1]));
      y[t] = r.categorical(B.row(z[t]));
    }
    latents[i] = std::move(z);
    seqs.emplace_back(std::move(y));
  }
  return {Dataset(std::move(seqs), params.num_states(), params.num_symbols()), std::move(latents)};
}

Dataset apply_random_missing(const Dataset& dataset, double p, const RngStream& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("apply_random_missing: p outside [0,1]");
  std::vector<ObservedSequence> seqs;
  seqs.reserve(dataset.num_sequences());
  for (int i = 0; i < dataset.num_sequences(); ++i) {
    RngStream r = rng.substream(i);
    std::vector<int> entries = dataset.sequence(i).entries();
    for (auto& v : entries)
      if (r.uniform() < p) v = kMissing;
    seqs.emplace_back(std::move(entries));
  }
  return Dataset(std::move(seqs), dataset.num_states(), dataset.num_symbols());
}

Dataset apply_blockwise_missing(const Dataset& dataset, double p, const RngStream& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("apply_blockwise_missing: p outside [0,1)");
  std::vector<ObservedSequence> seqs;
  seqs.reserve(dataset.num_sequences());
  for (int i = 0; i < dataset.num_sequences(); ++i) {
    RngStream r = rng.substream(i);
    std::vector<int> entries = dataset.sequence(i).entries();
    const int t_len = static_cast<int>(entries.size());
    const int block = static_cast<int>(std::lround(t_len * p));
    if (block >= t_len && t_len > 0)
      throw std::domain_error("apply_blockwise_missing: block length covers the whole sequence");
    if (block > 0) {
      int start = r.uniform_int(t_len - block + 1);
      for (int t = start; t < start + block; ++t) entries[t] = kMissing;
    }
    seqs.emplace_back(std::move(entries));
  }
  return Dataset(std::move(seqs), dataset.num_states(), dataset.num_symbols());
}

}  // namespace phmm
