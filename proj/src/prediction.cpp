#include "phmm/prediction.hpp"

#include <algorithm>

namespace phmm {

namespace {

std::set<int> powers_for(const ObservedSequence& seq, int extra_for_bridge) {
  std::set<int> needed{1};
  for (int g : seq.gaps()) {
    needed.insert(g);
    for (int k = 1; k < g; ++k) needed.insert(k);
  }
  if (seq.leading_offset() > 0) needed.insert(seq.leading_offset());
  (void)extra_for_bridge;
  return needed;
}

const HmmParams& pick_theta(const ChainTrace& trace, RngStream& rng) {
  if (trace.draws.empty()) throw std::invalid_argument("prediction: trace has no retained draws");
  return trace.draws[rng.uniform_int(static_cast<int>(trace.draws.size()))].params;
}

}  // namespace

std::vector<std::vector<int>> forecast(const ChainTrace& trace, const ObservedSequence& seq, int W,
                                       int draws, RngStream& rng) {
  if (W < 1) throw std::invalid_argument("forecast: W must be >= 1");
  if (draws < 1) throw std::invalid_argument("forecast: draws must be >= 1");
  auto needed = powers_for(seq, 0);
  std::vector<std::vector<int>> out;
  out.reserve(draws);
  for (int d = 0; d < draws; ++d) {
    const HmmParams& theta = pick_theta(trace, rng);
    PowerCache cache(theta.A, needed);
    LatentDraw z_obs;
    if (!seq.fully_missing()) {
      ForwardTable table = collapsed_forward(seq, theta, cache);
      z_obs = backward_sample(table, seq, theta, cache, rng);
    }
    out.push_back(reconstruct_full_path(seq, z_obs, theta, cache, rng, W));
  }
  return out;
}

std::vector<LatentDraw> decode_new(const ChainTrace& trace, const ObservedSequence& new_seq,
                                   int draws, RngStream& rng) {
  if (draws < 1) throw std::invalid_argument("decode_new: draws must be >= 1");
  for (int s : new_seq.observed_symbols())
    if (s >= trace.num_symbols)
      throw std::invalid_argument("decode_new: symbol " + std::to_string(s) +
                                  " outside the trace's alphabet");
  auto needed = powers_for(new_seq, 0);
  std::vector<LatentDraw> out;
  out.reserve(draws);
  for (int d = 0; d < draws; ++d) {
    const HmmParams& theta = pick_theta(trace, rng);
    if (new_seq.fully_missing()) {
      out.emplace_back();
      continue;
    }
    PowerCache cache(theta.A, needed);
    ForwardTable table = collapsed_forward(new_seq, theta, cache);
    out.push_back(backward_sample(table, new_seq, theta, cache, rng));
  }
  return out;
}

std::vector<std::vector<int>> ImputationDraws::histograms(int num_symbols) const {
  std::vector<std::vector<int>> h(missing_positions.size(), std::vector<int>(num_symbols, 0));
  for (const auto& draw : symbols)
    for (size_t p = 0; p < draw.size(); ++p) h[p][draw[p]]++;
  return h;
}

std::vector<int> ImputationDraws::modes(int num_symbols) const {
  auto h = histograms(num_symbols);
  std::vector<int> m(h.size(), 0);
  for (size_t p = 0; p < h.size(); ++p) {
    int best = 0;
    for (int s = 1; s < num_symbols; ++s)
      if (h[p][s] > h[p][best]) best = s;
    m[p] = best;
  }
  return m;
}

ImputationDraws impute_missing(const ChainTrace& trace, const ObservedSequence& seq, int draws,
                               RngStream& rng) {
  if (draws < 1) throw std::invalid_argument("impute_missing: draws must be >= 1");
  ImputationDraws out;
  for (int t = 0; t < seq.length(); ++t)
    if (seq.entries()[t] == kMissing) out.missing_positions.push_back(t);
  out.symbols.assign(draws, std::vector<int>(out.missing_positions.size()));
  if (out.missing_positions.empty()) return out;

  auto needed = powers_for(seq, 0);
  for (int d = 0; d < draws; ++d) {
    const HmmParams& theta = pick_theta(trace, rng);
    PowerCache cache(theta.A, needed);
    LatentDraw z_obs;
    if (!seq.fully_missing()) {
      ForwardTable table = collapsed_forward(seq, theta, cache);
      z_obs = backward_sample(table, seq, theta, cache, rng);
    }
    auto path = reconstruct_full_path(seq, z_obs, theta, cache, rng);
    const Matrix& B = theta.B.matrix();
    for (size_t p = 0; p < out.missing_positions.size(); ++p)
      out.symbols[d][p] = rng.categorical(B.row(path[out.missing_positions[p]]));
  }
  return out;
}

}  // namespace phmm
