#include "phmm/collapsed.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "phmm/bridge.hpp"

namespace phmm {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

/// Scaled forward pass over observed indices; alpha is row-major
/// num_observed x K, log_norms one entry per observed step. Returns the
/// sequence log-likelihood and counts each processed position into steps.
double forward_core(const ObservedSequence& seq, const Matrix& B, const double* init_dist,
                    const PowerCache& cache, double* alpha, double* log_norms, uint64_t& steps) {
  const auto& syms = seq.observed_symbols();
  const auto& gaps = seq.gaps();
  const int ko = static_cast<int>(syms.size());
  const int k_states = B.rows();

  double sum = 0.0;
  for (int z = 0; z < k_states; ++z) {
    double a = B(z, syms[0]) * init_dist[z];
    alpha[z] = a;
    sum += a;
  }
  if (!(sum > 0.0)) throw std::domain_error("collapsed_forward: sequence has zero likelihood");
  log_norms[0] = std::log(sum);
  for (int z = 0; z < k_states; ++z) alpha[z] /= sum;
  ++steps;

  double loglik = log_norms[0];
  for (int k = 1; k < ko; ++k) {
    const Matrix& P = cache.power(gaps[k - 1]);
    const double* prev = alpha + static_cast<size_t>(k - 1) * k_states;
    double* cur = alpha + static_cast<size_t>(k) * k_states;
    sum = 0.0;
    for (int j = 0; j < k_states; ++j) {
      double s = 0.0;
      for (int i = 0; i < k_states; ++i) s += prev[i] * P(i, j);
      double v = B(j, syms[k]) * s;
      cur[j] = v;
      sum += v;
    }
    if (!(sum > 0.0)) throw std::domain_error("collapsed_forward: sequence has zero likelihood");
    log_norms[k] = std::log(sum);
    for (int j = 0; j < k_states; ++j) cur[j] /= sum;
    loglik += log_norms[k];
    ++steps;
  }
  return loglik;
}

/// Backward sampling through the scaled forward values; writes the draw
/// aligned to observed_index into out.
void backward_core(const ObservedSequence& seq, const PowerCache& cache, const double* alpha,
                   int k_states, RngStream& rng, int* out, std::vector<double>& w) {
  const int ko = seq.num_observed();
  if (ko == 0) return;
  const auto& gaps = seq.gaps();

  out[ko - 1] = rng.categorical({alpha + static_cast<size_t>(ko - 1) * k_states,
                                 static_cast<size_t>(k_states)});
  for (int k = ko - 2; k >= 0; --k) {
    const Matrix& P = cache.power(gaps[k]);
    const int nxt = out[k + 1];
    const double* row = alpha + static_cast<size_t>(k) * k_states;
    for (int i = 0; i < k_states; ++i) w[i] = P(i, nxt) * row[i];
    out[k] = rng.categorical(w);
  }
}

void ensure_powers(const Matrix& A, int max_pow, std::vector<Matrix>& scratch) {
  if (max_pow < 1) return;
  scratch.resize(max_pow);
  scratch[0] = A;
  for (int k = 2; k <= max_pow; ++k) multiply_into(scratch[k - 2], A, scratch[k - 1]);
}

/// Proposal shapes conc * row; returns false when 100 attempts all
/// produced a zero entry (the caller then rejects the move).
bool propose_dirichlet_row(std::span<const double> row, double conc, RngStream& rng,
                           std::vector<double>& shape, std::vector<double>& out) {
  shape.assign(row.begin(), row.end());
  for (auto& v : shape) v *= conc;
  for (int attempt = 0; attempt < 100; ++attempt) {
    rng.dirichlet(shape, out);
    bool positive = true;
    for (double v : out)
      if (v <= 0.0) {
        positive = false;
        break;
      }
    if (positive) return true;
  }
  return false;
}

/// Surrogate proposal shape for a transition row: the conjugate posterior
/// the one-step pair counts would imply. Depends on z_o only.
void transition_surrogate_shape(const LatentStats& stats, std::span<const double> eta, int row,
                                std::vector<double>& shape) {
  const int k = stats.num_states;
  shape.assign(eta.begin(), eta.end());
  if (stats.max_gap >= 1)
    for (int j = 0; j < k; ++j)
      shape[j] += static_cast<double>(stats.gap_counts[1][static_cast<size_t>(row) * k + j]);
}

/// Surrogate shape for pi: conjugate in the offset-0 first-state counts.
void initial_surrogate_shape(const LatentStats& stats, std::span<const double> eta,
                             std::vector<double>& shape) {
  shape.assign(eta.begin(), eta.end());
  if (!stats.offset_counts.empty())
    for (int z = 0; z < stats.num_states; ++z)
      shape[z] += static_cast<double>(stats.offset_counts[0][z]);
}

bool propose_row(ProposalKernel kernel, std::span<const double> cur,
                 std::span<const double> surrogate, double conc, RngStream& rng,
                 std::vector<double>& shape, std::vector<double>& out) {
  if (kernel == ProposalKernel::Surrogate) {
    shape.assign(surrogate.begin(), surrogate.end());
    for (int attempt = 0; attempt < 100; ++attempt) {
      rng.dirichlet(shape, out);
      bool positive = true;
      for (double v : out)
        if (v <= 0.0) {
          positive = false;
          break;
        }
      if (positive) return true;
    }
    return false;
  }
  return propose_dirichlet_row(cur, conc, rng, shape, out);
}

/// Log MH ratio: likelihood and prior terms plus the proposal-density
/// correction of the chosen kernel.
double row_log_ratio_impl(ProposalKernel kernel, double prop_ll, double cur_ll,
                          std::span<const double> cur, std::span<const double> prop,
                          std::span<const double> eta, std::span<const double> surrogate,
                          double conc, std::vector<double>& shape) {
  double r = prop_ll - cur_ll;
  r += dirichlet_log_pdf(prop, eta) - dirichlet_log_pdf(cur, eta);
  if (kernel == ProposalKernel::Surrogate) {
    r += dirichlet_log_pdf(cur, surrogate) - dirichlet_log_pdf(prop, surrogate);
  } else {
    shape.assign(prop.begin(), prop.end());
    for (auto& v : shape) v *= conc;
    r += dirichlet_log_pdf(cur, shape);
    shape.assign(cur.begin(), cur.end());
    for (auto& v : shape) v *= conc;
    r -= dirichlet_log_pdf(prop, shape);
  }
  return r;
}

/// mh_repeats MH sweeps over the rows of A against the collapsed target;
/// mutates A and keeps the cache in sync with every accepted row. Returns
/// accepted-proposal counts per row.
std::vector<uint8_t> mh_transition_sweep(const LatentStats& stats, Matrix& A,
                                         std::span<const double> pi, const Priors& priors,
                                         const SamplerConfig& config, PowerCache& cache,
                                         RngStream& rng, std::vector<Matrix>& scratch) {
  const int k_states = A.rows();
  std::vector<uint8_t> accepts(k_states, 0);
  double cur_ll = transition_loglik(stats, A, pi, true, scratch);
  std::vector<double> prop(k_states), shape(k_states), cur_row(k_states), surrogate(k_states);
  Matrix Aprop = A;
  for (int rep = 0; rep < config.mh_repeats; ++rep) {
    for (int i = 0; i < k_states; ++i) {
      auto row = A.row(i);
      cur_row.assign(row.begin(), row.end());
      transition_surrogate_shape(stats, priors.eta_A.row(i), i, surrogate);
      if (!propose_row(config.kernel, cur_row, surrogate, config.mh_concentration, rng, shape,
                       prop))
        continue;
      Aprop = A;
      for (int j = 0; j < k_states; ++j) Aprop(i, j) = prop[j];
      double prop_ll = transition_loglik(stats, Aprop, pi, true, scratch);
      double log_acc = row_log_ratio_impl(config.kernel, prop_ll, cur_ll, cur_row, prop,
                                          priors.eta_A.row(i), surrogate,
                                          config.mh_concentration, shape);
      if (std::log(rng.uniform_open()) < log_acc) {
        for (int j = 0; j < k_states; ++j) A(i, j) = prop[j];
        cur_ll = prop_ll;
        accepts[i]++;
        cache.rebuild(StochasticMatrix::normalized(A));
      }
    }
  }
  return accepts;
}

uint8_t mh_initial_update(const LatentStats& stats, std::vector<double>& pi, const Priors& priors,
                          const SamplerConfig& config, const PowerCache& cache, RngStream& rng) {
  std::vector<double> prop(pi.size()), shape(pi.size()), surrogate(pi.size());
  uint8_t accepts = 0;
  double cur_ll = initial_loglik(stats, pi, cache);
  initial_surrogate_shape(stats, priors.eta_pi, surrogate);
  for (int rep = 0; rep < config.mh_repeats; ++rep) {
    if (!propose_row(config.kernel, pi, surrogate, config.mh_concentration, rng, shape, prop))
      continue;
    double prop_ll = initial_loglik(stats, prop, cache);
    double log_acc = row_log_ratio_impl(config.kernel, prop_ll, cur_ll, pi, prop, priors.eta_pi,
                                        surrogate, config.mh_concentration, shape);
    if (std::log(rng.uniform_open()) < log_acc) {
      pi = prop;
      cur_ll = prop_ll;
      accepts++;
    }
  }
  return accepts;
}

void conjugate_row_draw(std::span<const double> eta, const long* counts, RngStream& rng,
                        std::vector<double>& shape, std::span<double> out) {
  shape.resize(eta.size());
  for (size_t j = 0; j < eta.size(); ++j)
    shape[j] = eta[j] + (counts ? static_cast<double>(counts[j]) : 0.0);
  rng.dirichlet(shape, out);
}

}  // namespace

ForwardTable collapsed_forward(const ObservedSequence& seq, const HmmParams& params,
                               const PowerCache& cache) {
  const int k_states = params.num_states();
  ForwardTable table;
  if (seq.num_observed() == 0) {
    table.alpha = Matrix(0, k_states);
    return table;
  }
  int off = seq.leading_offset();
  Simplex init = (off == 0) ? params.pi : initial_gap_vector(params.pi, cache, off);
  table.alpha = Matrix(seq.num_observed(), k_states);
  table.log_norms.resize(seq.num_observed());
  uint64_t steps = 0;
  forward_core(seq, params.B.matrix(), init.span().data(), cache, table.alpha.data(),
               table.log_norms.data(), steps);
  return table;
}

LatentDraw backward_sample(const ForwardTable& table, const ObservedSequence& seq,
                           const HmmParams& params, const PowerCache& cache, RngStream& rng) {
  if (table.num_observed() != seq.num_observed())
    throw std::invalid_argument("backward_sample: table/sequence length mismatch");
  LatentDraw draw(seq.num_observed());
  std::vector<double> w(params.num_states());
  backward_core(seq, cache, table.alpha.data(), params.num_states(), rng, draw.data(), w);
  return draw;
}

LatentStats::LatentStats(int num_states_in, int num_symbols, int max_gap_in, int max_offset_in)
    : num_states(num_states_in), max_gap(max_gap_in), max_offset(max_offset_in) {
  gap_counts.assign(max_gap + 1, std::vector<long>(static_cast<size_t>(num_states) * num_states, 0));
  offset_counts.assign(max_offset + 1, std::vector<long>(num_states, 0));
  emission_counts.assign(static_cast<size_t>(num_states) * num_symbols, 0);
}

void LatentStats::clear() {
  for (auto& g : gap_counts) std::fill(g.begin(), g.end(), 0L);
  for (auto& o : offset_counts) std::fill(o.begin(), o.end(), 0L);
  std::fill(emission_counts.begin(), emission_counts.end(), 0L);
}

void LatentStats::add_sequence(const ObservedSequence& seq, const LatentDraw& draw) {
  const int ko = seq.num_observed();
  if (ko == 0) return;
  if (static_cast<int>(draw.size()) != ko)
    throw std::invalid_argument("LatentStats: draw length mismatch");
  const int m_symbols = static_cast<int>(emission_counts.size()) / num_states;

  int off = seq.leading_offset();
  if (off >= static_cast<int>(offset_counts.size())) {
    offset_counts.resize(off + 1, std::vector<long>(num_states, 0));
    max_offset = off;
  }
  offset_counts[off][draw[0]]++;

  const auto& syms = seq.observed_symbols();
  for (int k = 0; k < ko; ++k)
    emission_counts[static_cast<size_t>(draw[k]) * m_symbols + syms[k]]++;

  const auto& gaps = seq.gaps();
  for (int k = 0; k + 1 < ko; ++k) {
    int g = gaps[k];
    if (g >= static_cast<int>(gap_counts.size())) {
      gap_counts.resize(g + 1, std::vector<long>(static_cast<size_t>(num_states) * num_states, 0));
      max_gap = g;
    }
    gap_counts[g][static_cast<size_t>(draw[k]) * num_states + draw[k + 1]]++;
  }
}

LatentStats LatentStats::collect(const Dataset& dataset, const std::vector<LatentDraw>& latents) {
  if (static_cast<int>(latents.size()) != dataset.num_sequences())
    throw std::invalid_argument("LatentStats: latents size does not match dataset");
  LatentStats stats(dataset.num_states(), dataset.num_symbols(), dataset.max_gap(),
                    dataset.max_leading_offset());
  for (int i = 0; i < dataset.num_sequences(); ++i)
    stats.add_sequence(dataset.sequence(i), latents[i]);
  return stats;
}

double transition_loglik(const LatentStats& stats, const Matrix& A, std::span<const double> pi,
                         bool include_offsets, std::vector<Matrix>& scratch) {
  const int k_states = stats.num_states;
  int max_pow = stats.max_gap;
  if (include_offsets) max_pow = std::max(max_pow, stats.max_offset);
  ensure_powers(A, max_pow, scratch);

  double ll = 0.0;
  for (int g = 1; g <= stats.max_gap; ++g) {
    const auto& counts = stats.gap_counts[g];
    const Matrix& P = scratch[g - 1];
    for (int i = 0; i < k_states; ++i)
      for (int j = 0; j < k_states; ++j) {
        long n = counts[static_cast<size_t>(i) * k_states + j];
        if (n) ll += static_cast<double>(n) * std::log(P(i, j));
      }
  }
  if (include_offsets) {
    for (int off = 1; off <= stats.max_offset; ++off) {
      const auto& counts = stats.offset_counts[off];
      const Matrix& P = scratch[off - 1];
      for (int z = 0; z < k_states; ++z) {
        long n = counts[z];
        if (!n) continue;
        double v = 0.0;
        for (int i = 0; i < k_states; ++i) v += pi[i] * P(i, z);
        ll += static_cast<double>(n) * std::log(v);
      }
    }
  }
  return ll;
}

double initial_loglik(const LatentStats& stats, std::span<const double> pi,
                      const PowerCache& cache) {
  const int k_states = stats.num_states;
  double ll = 0.0;
  for (int z = 0; z < k_states; ++z) {
    long n = stats.offset_counts.empty() ? 0 : stats.offset_counts[0][z];
    if (n) ll += static_cast<double>(n) * std::log(pi[z]);
  }
  for (int off = 1; off <= stats.max_offset; ++off) {
    const auto& counts = stats.offset_counts[off];
    const Matrix& P = cache.power(off);
    for (int z = 0; z < k_states; ++z) {
      long n = counts[z];
      if (!n) continue;
      double v = 0.0;
      for (int i = 0; i < k_states; ++i) v += pi[i] * P(i, z);
      ll += static_cast<double>(n) * std::log(v);
    }
  }
  return ll;
}

double dirichlet_log_pdf(std::span<const double> x, std::span<const double> alpha) {
  if (x.size() != alpha.size()) throw std::invalid_argument("dirichlet_log_pdf: size mismatch");
  double sum_a = 0.0, ll = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sum_a += alpha[i];
    ll += (alpha[i] - 1.0) * std::log(x[i]);
    ll -= std::lgamma(alpha[i]);
  }
  return ll + std::lgamma(sum_a);
}

void posterior_dirichlet_row(std::span<const double> eta, const long* counts, RngStream& rng,
                             std::span<double> out) {
  std::vector<double> shape;
  conjugate_row_draw(eta, counts, rng, shape, out);
}

double transition_row_log_ratio(const LatentStats& stats, const Matrix& A, int row,
                                std::span<const double> proposal, std::span<const double> pi,
                                const Priors& priors, const SamplerConfig& config) {
  std::vector<Matrix> scratch;
  std::vector<double> shape, surrogate;
  transition_surrogate_shape(stats, priors.eta_A.row(row), row, surrogate);
  Matrix prop_mat = A;
  for (int j = 0; j < A.cols(); ++j) prop_mat(row, j) = proposal[j];
  double cur_ll = transition_loglik(stats, A, pi, true, scratch);
  double prop_ll = transition_loglik(stats, prop_mat, pi, true, scratch);
  std::vector<double> cur_row(A.row(row).begin(), A.row(row).end());
  return row_log_ratio_impl(config.kernel, prop_ll, cur_ll, cur_row, proposal,
                            priors.eta_A.row(row), surrogate, config.mh_concentration, shape);
}

double initial_log_ratio(const LatentStats& stats, std::span<const double> pi,
                         std::span<const double> proposal, const PowerCache& cache,
                         const Priors& priors, const SamplerConfig& config) {
  std::vector<double> shape, surrogate;
  initial_surrogate_shape(stats, priors.eta_pi, surrogate);
  double cur_ll = initial_loglik(stats, pi, cache);
  double prop_ll = initial_loglik(stats, proposal, cache);
  return row_log_ratio_impl(config.kernel, prop_ll, cur_ll, pi, proposal, priors.eta_pi,
                            surrogate, config.mh_concentration, shape);
}

StochasticMatrix update_emission(const Dataset& dataset, const std::vector<LatentDraw>& latents,
                                 const Priors& priors, RngStream& rng) {
  LatentStats stats = LatentStats::collect(dataset, latents);
  const int k_states = dataset.num_states();
  const int m_symbols = dataset.num_symbols();
  Matrix B(k_states, m_symbols);
  std::vector<double> shape;
  for (int i = 0; i < k_states; ++i)
    conjugate_row_draw(priors.eta_B.row(i), &stats.emission_counts[static_cast<size_t>(i) * m_symbols],
                       rng, shape, B.row(i));
  return StochasticMatrix::normalized(std::move(B));
}

std::pair<StochasticMatrix, std::vector<uint8_t>> update_transition_mh(
    const Dataset& dataset, const std::vector<LatentDraw>& latents, const StochasticMatrix& A,
    const Simplex& pi, const Priors& priors, const SamplerConfig& config, PowerCache& cache,
    RngStream& rng) {
  LatentStats stats = LatentStats::collect(dataset, latents);
  Matrix Acur = A.matrix();
  std::vector<Matrix> scratch;
  auto flags = mh_transition_sweep(stats, Acur, pi.span(), priors, config, cache, rng, scratch);
  return {StochasticMatrix::normalized(std::move(Acur)), std::move(flags)};
}

std::pair<Simplex, uint8_t> update_initial_mh(const Dataset& dataset,
                                              const std::vector<LatentDraw>& latents,
                                              const Simplex& pi, const Priors& priors,
                                              const SamplerConfig& config, const PowerCache& cache,
                                              RngStream& rng) {
  LatentStats stats = LatentStats::collect(dataset, latents);
  std::vector<double> cur = pi.weights();
  if (stats.max_offset == 0) {
    std::vector<double> shape, out(cur.size());
    conjugate_row_draw(priors.eta_pi, stats.offset_counts.empty() ? nullptr
                                                                  : stats.offset_counts[0].data(),
                       rng, shape, out);
    return {Simplex::normalized(std::move(out)), 1};
  }
  uint8_t flag = mh_initial_update(stats, cur, priors, config, cache, rng);
  return {Simplex::normalized(std::move(cur)), flag};
}

HmmParams draw_from_priors(const Priors& priors, RngStream& rng) {
  const int k_states = priors.num_states();
  const int m_symbols = priors.num_symbols();
  std::vector<double> pi(k_states);
  rng.dirichlet(priors.eta_pi, pi);
  Matrix A(k_states, k_states), B(k_states, m_symbols);
  for (int i = 0; i < k_states; ++i) rng.dirichlet(priors.eta_A.row(i), A.row(i));
  for (int i = 0; i < k_states; ++i) rng.dirichlet(priors.eta_B.row(i), B.row(i));
  return HmmParams(Simplex::normalized(std::move(pi)), StochasticMatrix::normalized(std::move(A)),
                   StochasticMatrix::normalized(std::move(B)));
}

ChainTrace run_collapsed_gibbs(const Dataset& dataset, const Priors& priors,
                               const SamplerConfig& config, const std::optional<HmmParams>& init) {
  config.validate();
  const int k_states = dataset.num_states();
  const int m_symbols = dataset.num_symbols();
  const int n = dataset.num_sequences();
  if (priors.num_states() != k_states || priors.num_symbols() != m_symbols)
    throw std::invalid_argument("run_collapsed_gibbs: priors do not match dataset alphabet");

  RngStream root(config.seed, 0);
  RngStream param_rng = root.substream(0);
  std::vector<RngStream> seq_rngs;
  std::vector<RngStream> path_rngs;
  seq_rngs.reserve(n);
  path_rngs.reserve(n);
  for (int i = 0; i < n; ++i) seq_rngs.push_back(root.substream(1 + i));
  for (int i = 0; i < n; ++i) path_rngs.push_back(root.substream(1 + n + i));

  HmmParams theta = init ? *init : draw_from_priors(priors, param_rng);
  if (theta.num_states() != k_states || theta.num_symbols() != m_symbols)
    throw std::invalid_argument("run_collapsed_gibbs: init does not match dataset alphabet");
  std::vector<double> pi = theta.pi.weights();
  Matrix A = theta.A.matrix();
  Matrix B = theta.B.matrix();

  // static mask structure: gap set, leading offsets, conjugacy eligibility
  const int max_gap = dataset.max_gap();
  const int max_off = dataset.max_leading_offset();
  const int max_pow = std::max({max_gap, max_off, 1});
  std::set<int> declared;
  for (int k = 1; k <= max_pow; ++k) declared.insert(k);
  const bool conj_transition = (max_gap <= 1 && max_off == 0);
  const bool conj_initial = (max_off == 0);

  std::vector<int> seq_offsets(n);
  std::vector<int> distinct_offsets;
  int max_ko = 0;
  for (int i = 0; i < n; ++i) {
    const auto& s = dataset.sequence(i);
    seq_offsets[i] = s.leading_offset();
    max_ko = std::max(max_ko, s.num_observed());
    if (seq_offsets[i] > 0) distinct_offsets.push_back(seq_offsets[i]);
  }
  std::sort(distinct_offsets.begin(), distinct_offsets.end());
  distinct_offsets.erase(std::unique(distinct_offsets.begin(), distinct_offsets.end()),
                         distinct_offsets.end());

  PowerCache cache(StochasticMatrix::normalized(A), declared);
  LatentStats stats(k_states, m_symbols, max_gap, max_off);
  std::vector<LatentDraw> latents(n);
  for (int i = 0; i < n; ++i) latents[i].resize(dataset.sequence(i).num_observed());

  std::vector<double> alpha(static_cast<size_t>(std::max(max_ko, 1)) * k_states);
  std::vector<double> log_norms(std::max(max_ko, 1));
  std::vector<double> w(k_states), shape(k_states), prop(k_states);
  std::vector<std::vector<double>> offset_vecs(max_off + 1);
  for (int off : distinct_offsets) offset_vecs[off].resize(k_states);
  std::vector<Matrix> scratch;

  ChainTrace trace;
  trace.num_states = k_states;
  trace.num_symbols = m_symbols;
  trace.sampler = "collapsed";
  trace.config = config;
  trace.conjugate_transition_path = conj_transition;
  trace.conjugate_initial_path = conj_initial;
  trace.mh_stride = k_states + 1;
  trace.iter_ms_forward.resize(config.iterations);
  trace.iter_ms_params.resize(config.iterations);
  trace.mh_accepts.assign(static_cast<size_t>(config.iterations) * trace.mh_stride, 0);
  trace.draws.reserve(config.retained_count());
  if (config.accumulate_state_counts) {
    trace.latent_state_counts.resize(n);
    for (int i = 0; i < n; ++i)
      trace.latent_state_counts[i].assign(static_cast<size_t>(dataset.sequence(i).length()) * k_states,
                                          0);
  }

  for (int iter = 1; iter <= config.iterations; ++iter) {
    // refresh pi^T A^off vectors for the current parameters
    auto tp0 = Clock::now();
    for (int off : distinct_offsets) row_times_matrix(pi, cache.power(off), offset_vecs[off]);
    double ms_params = ms_since(tp0);

    // latent phase: collapsed FFBS per sequence, statistics on the fly
    auto tz0 = Clock::now();
    stats.clear();
    double iter_loglik = 0.0;
    uint64_t steps = 0;
    for (int i = 0; i < n; ++i) {
      const auto& seq = dataset.sequence(i);
      if (seq.num_observed() == 0) continue;
      const double* init_dist =
          seq_offsets[i] == 0 ? pi.data() : offset_vecs[seq_offsets[i]].data();
      iter_loglik += forward_core(seq, B, init_dist, cache, alpha.data(), log_norms.data(), steps);
      backward_core(seq, cache, alpha.data(), k_states, seq_rngs[i], latents[i].data(), w);
      stats.add_sequence(seq, latents[i]);
    }
    double ms_forward = ms_since(tz0);
    trace.z_steps_per_iter = steps;

    // trace accumulation (untimed): full-path tallies under the parameters
    // that generated this latent draw
    const bool retained = iter > config.burn_in && (iter - config.burn_in) % config.thin == 0;
    if (retained && config.accumulate_state_counts) {
      Simplex pi_s = Simplex::normalized(pi);
      HmmParams cur(pi_s, cache.base(), StochasticMatrix::normalized(B));
      for (int i = 0; i < n; ++i) {
        auto path = reconstruct_full_path(dataset.sequence(i), latents[i], cur, cache, path_rngs[i]);
        auto& counts = trace.latent_state_counts[i];
        for (size_t t = 0; t < path.size(); ++t) counts[t * k_states + path[t]]++;
      }
    }

    // parameter phase
    auto tp1 = Clock::now();
    uint8_t* accept_row = &trace.mh_accepts[static_cast<size_t>(iter - 1) * trace.mh_stride];

    for (int i = 0; i < k_states; ++i)
      conjugate_row_draw(priors.eta_B.row(i),
                         &stats.emission_counts[static_cast<size_t>(i) * m_symbols], param_rng,
                         shape, B.row(i));

    if (conj_transition) {
      for (int i = 0; i < k_states; ++i) {
        const long* counts = stats.max_gap >= 1
                                 ? &stats.gap_counts[1][static_cast<size_t>(i) * k_states]
                                 : nullptr;
        conjugate_row_draw(priors.eta_A.row(i), counts, param_rng, shape, A.row(i));
        accept_row[i] = static_cast<uint8_t>(config.mh_repeats);  // exact draw
      }
      cache.rebuild(StochasticMatrix::normalized(A));
    } else {
      auto counts = mh_transition_sweep(stats, A, pi, priors, config, cache, param_rng, scratch);
      for (int i = 0; i < k_states; ++i) accept_row[i] = counts[i];
    }

    if (conj_initial) {
      conjugate_row_draw(priors.eta_pi,
                         stats.offset_counts.empty() ? nullptr : stats.offset_counts[0].data(),
                         param_rng, shape, pi);
      accept_row[k_states] = static_cast<uint8_t>(config.mh_repeats);  // exact draw
    } else {
      accept_row[k_states] = mh_initial_update(stats, pi, priors, config, cache, param_rng);
    }
    ms_params += ms_since(tp1);

    trace.iter_ms_forward[iter - 1] = ms_forward;
    trace.iter_ms_params[iter - 1] = ms_params;

    if (retained) {
      RetainedDraw draw{iter,
                        HmmParams(Simplex::normalized(pi), StochasticMatrix::normalized(A),
                                  StochasticMatrix::normalized(B)),
                        iter_loglik,
                        ms_forward,
                        ms_params,
                        {}};
      if (config.record_latents) draw.latents = latents;
      trace.draws.push_back(std::move(draw));
    }
  }
  return trace;
}

}  // namespace phmm
