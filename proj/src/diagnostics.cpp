#include "phmm/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "phmm/prediction.hpp"

namespace phmm {

double ess(std::span<const double> series) {
  const int n = static_cast<int>(series.size());
  if (n < 10) throw std::invalid_argument("ess: series length must be >= 10");
  bool constant = true;
  for (double v : series)
    if (v != series[0]) {
      constant = false;
      break;
    }
  if (constant) return static_cast<double>(n);  // by convention: no autocorrelation
  double mean = 0.0;
  for (double v : series) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : series) var += (v - mean) * (v - mean);
  var /= n;
  if (!(var > 0.0)) return static_cast<double>(n);

  auto rho = [&](int k) {
    if (k >= n) return 0.0;
    double acc = 0.0;
    for (int t = 0; t + k < n; ++t) acc += (series[t] - mean) * (series[t + k] - mean);
    return acc / (n * var);
  };

  // Geyer initial positive sequence: sum pairs while they stay positive.
  double pair_sum = 0.0;
  for (int m = 0;; ++m) {
    double g = rho(2 * m) + rho(2 * m + 1);
    if (g <= 0.0 || 2 * m >= n) break;
    pair_sum += g;
  }
  double tau = 2.0 * pair_sum - 1.0;
  if (!(tau > 0.0)) return static_cast<double>(n);
  return std::clamp(static_cast<double>(n) / tau, 0.0, static_cast<double>(n));
}

std::vector<int> align_labels(const Matrix& emis_estimate, const Matrix& emis_truth) {
  const int k = emis_truth.rows();
  if (k > 5) throw std::invalid_argument("align_labels: K > 5 not supported");
  if (emis_estimate.rows() != k || emis_estimate.cols() != emis_truth.cols())
    throw std::invalid_argument("align_labels: dimension mismatch");
  std::vector<int> perm(k), best(k);
  std::iota(perm.begin(), perm.end(), 0);
  best = perm;
  double best_mse = std::numeric_limits<double>::infinity();
  do {
    double mse = 0.0;
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < emis_truth.cols(); ++j) {
        double d = emis_estimate(perm[i], j) - emis_truth(i, j);
        mse += d * d;
      }
    if (mse < best_mse) {
      best_mse = mse;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

PosteriorMean posterior_mean(const ChainTrace& trace) {
  if (trace.draws.empty()) throw std::invalid_argument("posterior_mean: empty trace");
  const int k = trace.num_states;
  const int m = trace.num_symbols;
  PosteriorMean out{std::vector<double>(k, 0.0), Matrix(k, k), Matrix(k, m)};
  for (const auto& d : trace.draws) {
    for (int i = 0; i < k; ++i) {
      out.pi[i] += d.params.pi[i];
      for (int j = 0; j < k; ++j) out.A(i, j) += d.params.A(i, j);
      for (int j = 0; j < m; ++j) out.B(i, j) += d.params.B(i, j);
    }
  }
  const double n = static_cast<double>(trace.draws.size());
  for (int i = 0; i < k; ++i) {
    out.pi[i] /= n;
    for (int j = 0; j < k; ++j) out.A(i, j) /= n;
    for (int j = 0; j < m; ++j) out.B(i, j) /= n;
  }
  return out;
}

namespace {

struct AlignedMse {
  double init, trans, emis;
};

AlignedMse aligned_mse(const std::vector<double>& pi, const Matrix& A, const Matrix& B,
                       const HmmParams& truth, const std::vector<int>& perm) {
  const int k = truth.num_states();
  const int m = truth.num_symbols();
  AlignedMse out{0.0, 0.0, 0.0};
  for (int i = 0; i < k; ++i) {
    double d = pi[perm[i]] - truth.pi[i];
    out.init += d * d;
    for (int j = 0; j < k; ++j) {
      double e = A(perm[i], perm[j]) - truth.A(i, j);
      out.trans += e * e;
    }
    for (int j = 0; j < m; ++j) {
      double e = B(perm[i], j) - truth.B(i, j);
      out.emis += e * e;
    }
  }
  out.init /= k;
  out.trans /= static_cast<double>(k) * k;
  out.emis /= static_cast<double>(k) * m;
  return out;
}

double majority_vote_accuracy(const ChainTrace& trace, const GroundTruth& truth,
                              const std::vector<int>& perm) {
  const int k = trace.num_states;
  std::vector<int> inverse(k);  // trace label -> truth state
  for (int i = 0; i < k; ++i) inverse[perm[i]] = i;
  long correct = 0, total = 0;
  for (size_t s = 0; s < trace.latent_state_counts.size(); ++s) {
    const auto& counts = trace.latent_state_counts[s];
    const auto& truth_path = truth.latents[s];
    const int t_len = static_cast<int>(counts.size()) / k;
    for (int t = 0; t < t_len; ++t) {
      int arg = 0;
      for (int z = 1; z < k; ++z)
        if (counts[static_cast<size_t>(t) * k + z] > counts[static_cast<size_t>(t) * k + arg])
          arg = z;
      if (inverse[arg] == truth_path[t]) ++correct;
      ++total;
    }
  }
  return total ? static_cast<double>(correct) / total : 0.0;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

SamplerReport report(const ChainTrace& trace, const std::optional<GroundTruth>& truth) {
  if (trace.draws.empty()) throw std::invalid_argument("report: empty trace");
  SamplerReport rep;
  rep.sampler = trace.sampler;

  const int k = trace.num_states;
  const int m = trace.num_symbols;
  const size_t n_draws = trace.draws.size();

  // median ESS over the free coordinates: K-1 for pi, K(K-1) for A, K(M-1) for B
  std::vector<double> series(n_draws);
  std::vector<double> ess_values;
  auto push_series = [&](auto&& getter) {
    for (size_t d = 0; d < n_draws; ++d) series[d] = getter(trace.draws[d].params);
    ess_values.push_back(ess(series));
  };
  if (n_draws >= 10) {
    for (int i = 0; i < k - 1; ++i)
      push_series([i](const HmmParams& p) { return p.pi[i]; });
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k - 1; ++j)
        push_series([i, j](const HmmParams& p) { return p.A(i, j); });
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < m - 1; ++j)
        push_series([i, j](const HmmParams& p) { return p.B(i, j); });
    double med = median_of(ess_values);
    int sampling_iters = trace.config.iterations - trace.config.burn_in;
    rep.median_ess_per_iter = med / sampling_iters;
    double secs = trace.sampling_ms() / 1000.0;
    if (secs > 0.0) rep.median_ess_per_sec = med / secs;
  }

  rep.time_per_1000_iters =
      trace.sampling_ms() / 1000.0 / trace.config.iterations * 1000.0;

  if (truth) {
    PosteriorMean mean = posterior_mean(trace);
    auto perm = align_labels(mean.B, truth->params.B.matrix());
    auto mse = aligned_mse(mean.pi, mean.A, mean.B, truth->params, perm);
    rep.init_mse = mse.init;
    rep.trans_mse = mse.trans;
    rep.emis_mse = mse.emis;
    if (!trace.latent_state_counts.empty() && !truth->latents.empty())
      rep.latent_accuracy = majority_vote_accuracy(trace, *truth, perm);
  }
  return rep;
}

SamplerReport report_em(const EmResult& em, const Dataset& dataset,
                        const std::optional<GroundTruth>& truth, double wall_seconds) {
  SamplerReport rep;
  rep.sampler = "em";
  if (em.iterations > 0) rep.time_per_1000_iters = wall_seconds / em.iterations * 1000.0;
  if (truth) {
    auto perm = align_labels(em.params.B.matrix(), truth->params.B.matrix());
    auto mse = aligned_mse(em.params.pi.weights(), em.params.A.matrix(), em.params.B.matrix(),
                           truth->params, perm);
    rep.init_mse = mse.init;
    rep.trans_mse = mse.trans;
    rep.emis_mse = mse.emis;
    if (!truth->latents.empty()) {
      const int k = dataset.num_states();
      std::vector<int> inverse(k);
      for (int i = 0; i < k; ++i) inverse[perm[i]] = i;
      auto paths = viterbi_decode(dataset, em.params);
      long correct = 0, total = 0;
      for (int s = 0; s < dataset.num_sequences(); ++s)
        for (size_t t = 0; t < paths[s].size(); ++t) {
          if (inverse[paths[s][t]] == truth->latents[s][t]) ++correct;
          ++total;
        }
      rep.latent_accuracy = total ? static_cast<double>(correct) / total : 0.0;
    }
  }
  return rep;
}

ChainTrace run_sampler(SamplerKind kind, const Dataset& dataset, const Priors& priors,
                       const SamplerConfig& config, const std::optional<HmmParams>& init) {
  switch (kind) {
    case SamplerKind::Collapsed:
      return run_collapsed_gibbs(dataset, priors, config, init);
    case SamplerKind::Partial:
      return run_partially_collapsed_gibbs(dataset, priors, config, init);
    case SamplerKind::Vanilla:
      return run_vanilla_gibbs(dataset, priors, config, init);
  }
  throw std::invalid_argument("run_sampler: unknown kind");
}

double cross_validated_accuracy(const Dataset& dataset, SamplerKind kind,
                                const SamplerConfig& config, double mask_fraction, int folds,
                                const RngStream& rng, int impute_draws) {
  if (!(mask_fraction > 0.0 && mask_fraction < 1.0))
    throw std::invalid_argument("cross_validated_accuracy: mask_fraction outside (0,1)");
  if (folds < 1) throw std::invalid_argument("cross_validated_accuracy: folds must be >= 1");

  // pool of observed entry coordinates
  std::vector<std::pair<int, int>> observed;
  for (int i = 0; i < dataset.num_sequences(); ++i)
    for (int t : dataset.sequence(i).observed_index()) observed.emplace_back(i, t);
  const long n_obs = static_cast<long>(observed.size());
  long mask_count = std::lround(mask_fraction * n_obs);
  if (mask_count < 1) mask_count = 1;
  if (n_obs == 0 || mask_count >= n_obs)
    throw std::domain_error("cross_validated_accuracy: masking would empty the observed set");

  double accuracy_sum = 0.0;
  for (int fold = 0; fold < folds; ++fold) {
    RngStream fold_rng = rng.substream(fold);
    // partial Fisher-Yates for a uniform subset
    std::vector<std::pair<int, int>> pool = observed;
    for (long j = 0; j < mask_count; ++j) {
      long pick = j + fold_rng.uniform_int(static_cast<int>(n_obs - j));
      std::swap(pool[j], pool[pick]);
    }

    std::vector<std::vector<int>> entries;
    entries.reserve(dataset.num_sequences());
    for (int i = 0; i < dataset.num_sequences(); ++i) entries.push_back(dataset.sequence(i).entries());
    for (long j = 0; j < mask_count; ++j) entries[pool[j].first][pool[j].second] = kMissing;

    std::vector<ObservedSequence> seqs;
    seqs.reserve(entries.size());
    for (auto& e : entries) seqs.emplace_back(std::move(e));
    Dataset masked(std::move(seqs), dataset.num_states(), dataset.num_symbols());

    SamplerConfig fold_config = config;
    fold_config.seed = config.seed + static_cast<uint64_t>(fold) + 1;
    fold_config.accumulate_state_counts = false;
    Priors priors = Priors::flat(dataset.num_states(), dataset.num_symbols());
    ChainTrace trace = run_sampler(kind, masked, priors, fold_config);

    long correct = 0;
    RngStream impute_rng = fold_rng.substream(1u << 20);
    std::vector<std::vector<int>> fold_modes(dataset.num_sequences());
    std::vector<bool> imputed(dataset.num_sequences(), false);
    for (long j = 0; j < mask_count; ++j) {
      int i = pool[j].first;
      if (!imputed[i]) {
        auto draws = impute_missing(trace, masked.sequence(i), impute_draws, impute_rng);
        auto modes = draws.modes(dataset.num_symbols());
        fold_modes[i].assign(masked.sequence(i).length(), -1);
        for (size_t p = 0; p < draws.missing_positions.size(); ++p)
          fold_modes[i][draws.missing_positions[p]] = modes[p];
        imputed[i] = true;
      }
      if (fold_modes[i][pool[j].second] == dataset.sequence(i).entries()[pool[j].second]) ++correct;
    }
    accuracy_sum += static_cast<double>(correct) / static_cast<double>(mask_count);
  }
  return accuracy_sum / folds;
}

}  // namespace phmm
