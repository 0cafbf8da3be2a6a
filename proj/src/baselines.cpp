#include "phmm/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace phmm {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

double emission_or_one(const Matrix& B, int state, int symbol) {
  return symbol == kMissing ? 1.0 : B(state, symbol);
}

double forward_full_core(const int* entries, int t_len, const double* pi, const Matrix& A,
                         const Matrix& B, double* alpha, double* log_norms, uint64_t& steps) {
  const int k_states = A.rows();
  double sum = 0.0;
  for (int z = 0; z < k_states; ++z) {
    double v = emission_or_one(B, z, entries[0]) * pi[z];
    alpha[z] = v;
    sum += v;
  }
  if (!(sum > 0.0)) throw std::domain_error("forward_full: sequence has zero likelihood");
  log_norms[0] = std::log(sum);
  for (int z = 0; z < k_states; ++z) alpha[z] /= sum;
  ++steps;

  double loglik = log_norms[0];
  for (int t = 1; t < t_len; ++t) {
    const double* prev = alpha + static_cast<size_t>(t - 1) * k_states;
    double* cur = alpha + static_cast<size_t>(t) * k_states;
    sum = 0.0;
    for (int j = 0; j < k_states; ++j) {
      double s = 0.0;
      for (int i = 0; i < k_states; ++i) s += prev[i] * A(i, j);
      double v = emission_or_one(B, j, entries[t]) * s;
      cur[j] = v;
      sum += v;
    }
    if (!(sum > 0.0)) throw std::domain_error("forward_full: sequence has zero likelihood");
    log_norms[t] = std::log(sum);
    for (int j = 0; j < k_states; ++j) cur[j] /= sum;
    loglik += log_norms[t];
    ++steps;
  }
  return loglik;
}

void backward_sample_full_core(int t_len, const Matrix& A, const double* alpha, RngStream& rng,
                               int* out, std::vector<double>& w) {
  const int k_states = A.rows();
  out[t_len - 1] = rng.categorical({alpha + static_cast<size_t>(t_len - 1) * k_states,
                                    static_cast<size_t>(k_states)});
  for (int t = t_len - 2; t >= 0; --t) {
    const int nxt = out[t + 1];
    const double* row = alpha + static_cast<size_t>(t) * k_states;
    for (int i = 0; i < k_states; ++i) w[i] = row[i] * A(i, nxt);
    out[t] = rng.categorical(w);
  }
}

struct CountSet {
  std::vector<long> pi;     // K
  std::vector<long> trans;  // K*K
  std::vector<long> emis;   // K*M
  CountSet(int k, int m) : pi(k, 0), trans(static_cast<size_t>(k) * k, 0), emis(static_cast<size_t>(k) * m, 0) {}
  void clear() {
    std::fill(pi.begin(), pi.end(), 0L);
    std::fill(trans.begin(), trans.end(), 0L);
    std::fill(emis.begin(), emis.end(), 0L);
  }
};

void conjugate_theta_update(const CountSet& counts, const Priors& priors, RngStream& rng,
                            std::vector<double>& pi, Matrix& A, Matrix& B) {
  const int k_states = A.rows();
  const int m_symbols = B.cols();
  for (int i = 0; i < k_states; ++i)
    posterior_dirichlet_row(priors.eta_B.row(i), &counts.emis[static_cast<size_t>(i) * m_symbols],
                            rng, B.row(i));
  for (int i = 0; i < k_states; ++i)
    posterior_dirichlet_row(priors.eta_A.row(i), &counts.trans[static_cast<size_t>(i) * k_states],
                            rng, A.row(i));
  posterior_dirichlet_row(priors.eta_pi, counts.pi.data(), rng, pi);
}

struct RunnerState {
  std::vector<double> pi;
  Matrix A, B;
};

RunnerState init_state(const Dataset& ds, const Priors& priors, const std::optional<HmmParams>& init,
                       RngStream& param_rng) {
  HmmParams theta = init ? *init : draw_from_priors(priors, param_rng);
  if (theta.num_states() != ds.num_states() || theta.num_symbols() != ds.num_symbols())
    throw std::invalid_argument("sampler: init does not match dataset alphabet");
  return {theta.pi.weights(), theta.A.matrix(), theta.B.matrix()};
}

ChainTrace make_trace(const Dataset& ds, const SamplerConfig& config, const std::string& name) {
  ChainTrace trace;
  trace.num_states = ds.num_states();
  trace.num_symbols = ds.num_symbols();
  trace.sampler = name;
  trace.config = config;
  trace.conjugate_transition_path = true;
  trace.conjugate_initial_path = true;
  trace.iter_ms_forward.resize(config.iterations);
  trace.iter_ms_params.resize(config.iterations);
  trace.draws.reserve(config.retained_count());
  if (config.accumulate_state_counts) {
    trace.latent_state_counts.resize(ds.num_sequences());
    for (int i = 0; i < ds.num_sequences(); ++i)
      trace.latent_state_counts[i].assign(
          static_cast<size_t>(ds.sequence(i).length()) * ds.num_states(), 0);
  }
  return trace;
}

void record_draw(ChainTrace& trace, const SamplerConfig& config, int iter,
                 const RunnerState& state, double loglik, double ms_forward, double ms_params,
                 const std::vector<std::vector<int>>& paths, const Dataset& ds) {
  const int k_states = ds.num_states();
  if (config.accumulate_state_counts)
    for (int i = 0; i < ds.num_sequences(); ++i) {
      auto& counts = trace.latent_state_counts[i];
      const auto& path = paths[i];
      for (size_t t = 0; t < path.size(); ++t) counts[t * k_states + path[t]]++;
    }
  RetainedDraw draw{iter,
                    HmmParams(Simplex::normalized(state.pi),
                              StochasticMatrix::normalized(state.A),
                              StochasticMatrix::normalized(state.B)),
                    loglik,
                    ms_forward,
                    ms_params,
                    {}};
  if (config.record_latents) {
    draw.latents.resize(ds.num_sequences());
    for (int i = 0; i < ds.num_sequences(); ++i) {
      const auto& idx = ds.sequence(i).observed_index();
      draw.latents[i].reserve(idx.size());
      for (int t : idx) draw.latents[i].push_back(paths[i][t]);
    }
  }
  trace.draws.push_back(std::move(draw));
}

}  // namespace

double forward_full(std::span<const int> entries, const HmmParams& params, Matrix& alpha,
                    std::vector<double>& log_norms) {
  const int t_len = static_cast<int>(entries.size());
  if (t_len == 0) return 0.0;
  const int k_states = params.num_states();
  if (alpha.rows() != t_len || alpha.cols() != k_states) alpha = Matrix(t_len, k_states);
  log_norms.resize(t_len);
  uint64_t steps = 0;
  return forward_full_core(entries.data(), t_len, params.pi.span().data(), params.A.matrix(),
                           params.B.matrix(), alpha.data(), log_norms.data(), steps);
}

std::vector<int> backward_sample_full(const Matrix& alpha, const HmmParams& params,
                                      RngStream& rng) {
  std::vector<int> path(alpha.rows());
  if (path.empty()) return path;
  std::vector<double> w(params.num_states());
  backward_sample_full_core(alpha.rows(), params.A.matrix(), alpha.data(), rng, path.data(), w);
  return path;
}

ChainTrace run_vanilla_gibbs(const Dataset& dataset, const Priors& priors,
                             const SamplerConfig& config, const std::optional<HmmParams>& init) {
  config.validate();
  const int k_states = dataset.num_states();
  const int m_symbols = dataset.num_symbols();
  const int n = dataset.num_sequences();
  if (priors.num_states() != k_states || priors.num_symbols() != m_symbols)
    throw std::invalid_argument("run_vanilla_gibbs: priors do not match dataset alphabet");

  RngStream root(config.seed, 0);
  RngStream param_rng = root.substream(0);
  std::vector<RngStream> seq_rngs;
  seq_rngs.reserve(n);
  for (int i = 0; i < n; ++i) seq_rngs.push_back(root.substream(1 + i));

  RunnerState state = init_state(dataset, priors, init, param_rng);
  ChainTrace trace = make_trace(dataset, config, "vanilla");

  int max_t = 1;
  for (const auto& s : dataset.sequences()) max_t = std::max(max_t, s.length());
  std::vector<double> alpha(static_cast<size_t>(max_t) * k_states);
  std::vector<double> log_norms(max_t);
  std::vector<double> w(k_states);
  CountSet counts(k_states, m_symbols);

  // augmented data: entries with y_m imputed in place
  std::vector<std::vector<int>> y_full(n);
  std::vector<std::vector<int>> missing_at(n);
  std::vector<std::vector<int>> paths(n);
  for (int i = 0; i < n; ++i) {
    y_full[i] = dataset.sequence(i).entries();
    for (int t = 0; t < dataset.sequence(i).length(); ++t)
      if (y_full[i][t] == kMissing) missing_at[i].push_back(t);
    paths[i].resize(dataset.sequence(i).length());
  }

  // initial z | theta, y_o (missing scored 1), then an initial imputation
  uint64_t steps = 0;
  for (int i = 0; i < n; ++i) {
    const auto& entries = dataset.sequence(i).entries();
    if (entries.empty()) continue;
    forward_full_core(entries.data(), static_cast<int>(entries.size()), state.pi.data(), state.A,
                      state.B, alpha.data(), log_norms.data(), steps);
    backward_sample_full_core(static_cast<int>(entries.size()), state.A, alpha.data(), seq_rngs[i],
                              paths[i].data(), w);
  }

  for (int iter = 1; iter <= config.iterations; ++iter) {
    // y_m | z, theta: single-site draws from the emission row
    auto tz0 = Clock::now();
    for (int i = 0; i < n; ++i)
      for (int t : missing_at[i]) y_full[i][t] = seq_rngs[i].categorical(state.B.row(paths[i][t]));
    double ms_forward = ms_since(tz0);

    // theta | y, z: fully conjugate, imputed values count as data
    auto tp0 = Clock::now();
    counts.clear();
    for (int i = 0; i < n; ++i) {
      const auto& path = paths[i];
      if (path.empty()) continue;
      counts.pi[path[0]]++;
      for (size_t t = 0; t + 1 < path.size(); ++t)
        counts.trans[static_cast<size_t>(path[t]) * k_states + path[t + 1]]++;
      for (size_t t = 0; t < path.size(); ++t)
        counts.emis[static_cast<size_t>(path[t]) * m_symbols + y_full[i][t]]++;
    }
    conjugate_theta_update(counts, priors, param_rng, state.pi, state.A, state.B);
    double ms_params = ms_since(tp0);

    // z | theta, y: full-path FFBS on the augmented data
    auto tz1 = Clock::now();
    double iter_loglik = 0.0;
    steps = 0;
    for (int i = 0; i < n; ++i) {
      if (y_full[i].empty()) continue;
      iter_loglik += forward_full_core(y_full[i].data(), static_cast<int>(y_full[i].size()),
                                       state.pi.data(), state.A, state.B, alpha.data(),
                                       log_norms.data(), steps);
      backward_sample_full_core(static_cast<int>(y_full[i].size()), state.A, alpha.data(),
                                seq_rngs[i], paths[i].data(), w);
    }
    ms_forward += ms_since(tz1);
    trace.z_steps_per_iter = steps;
    trace.iter_ms_forward[iter - 1] = ms_forward;
    trace.iter_ms_params[iter - 1] = ms_params;

    if (iter > config.burn_in && (iter - config.burn_in) % config.thin == 0)
      record_draw(trace, config, iter, state, iter_loglik, ms_forward, ms_params, paths, dataset);
  }
  return trace;
}

ChainTrace run_partially_collapsed_gibbs(const Dataset& dataset, const Priors& priors,
                                         const SamplerConfig& config,
                                         const std::optional<HmmParams>& init) {
  config.validate();
  const int k_states = dataset.num_states();
  const int m_symbols = dataset.num_symbols();
  const int n = dataset.num_sequences();
  if (priors.num_states() != k_states || priors.num_symbols() != m_symbols)
    throw std::invalid_argument("run_partially_collapsed_gibbs: priors do not match dataset");

  RngStream root(config.seed, 0);
  RngStream param_rng = root.substream(0);
  std::vector<RngStream> seq_rngs;
  seq_rngs.reserve(n);
  for (int i = 0; i < n; ++i) seq_rngs.push_back(root.substream(1 + i));

  RunnerState state = init_state(dataset, priors, init, param_rng);
  ChainTrace trace = make_trace(dataset, config, "partial");

  int max_t = 1;
  for (const auto& s : dataset.sequences()) max_t = std::max(max_t, s.length());
  std::vector<double> alpha(static_cast<size_t>(max_t) * k_states);
  std::vector<double> log_norms(max_t);
  std::vector<double> w(k_states);
  CountSet counts(k_states, m_symbols);
  std::vector<std::vector<int>> paths(n);
  for (int i = 0; i < n; ++i) paths[i].resize(dataset.sequence(i).length());

  for (int iter = 1; iter <= config.iterations; ++iter) {
    // z | theta, y_o: missing positions contribute emission factor 1
    auto tz0 = Clock::now();
    double iter_loglik = 0.0;
    uint64_t steps = 0;
    for (int i = 0; i < n; ++i) {
      const auto& entries = dataset.sequence(i).entries();
      if (entries.empty()) continue;
      iter_loglik += forward_full_core(entries.data(), static_cast<int>(entries.size()),
                                       state.pi.data(), state.A, state.B, alpha.data(),
                                       log_norms.data(), steps);
      backward_sample_full_core(static_cast<int>(entries.size()), state.A, alpha.data(),
                                seq_rngs[i], paths[i].data(), w);
    }
    double ms_forward = ms_since(tz0);
    trace.z_steps_per_iter = steps;

    // theta | y_o, z: conjugate; emission counts from observed pairs only
    auto tp0 = Clock::now();
    counts.clear();
    for (int i = 0; i < n; ++i) {
      const auto& path = paths[i];
      const auto& entries = dataset.sequence(i).entries();
      if (path.empty()) continue;
      counts.pi[path[0]]++;
      for (size_t t = 0; t + 1 < path.size(); ++t)
        counts.trans[static_cast<size_t>(path[t]) * k_states + path[t + 1]]++;
      for (size_t t = 0; t < path.size(); ++t)
        if (entries[t] != kMissing)
          counts.emis[static_cast<size_t>(path[t]) * m_symbols + entries[t]]++;
    }
    conjugate_theta_update(counts, priors, param_rng, state.pi, state.A, state.B);
    double ms_params = ms_since(tp0);

    trace.iter_ms_forward[iter - 1] = ms_forward;
    trace.iter_ms_params[iter - 1] = ms_params;

    if (iter > config.burn_in && (iter - config.burn_in) % config.thin == 0)
      record_draw(trace, config, iter, state, iter_loglik, ms_forward, ms_params, paths, dataset);
  }
  return trace;
}

EmResult run_em(const Dataset& dataset, const std::optional<HmmParams>& init, int max_iters,
                double tol, uint64_t seed) {
  if (max_iters < 1) throw std::invalid_argument("run_em: max_iters must be >= 1");
  if (!(tol > 0.0)) throw std::invalid_argument("run_em: tol must be positive");
  const int k_states = dataset.num_states();
  const int m_symbols = dataset.num_symbols();

  RngStream rng(seed, 0);
  Priors flat = Priors::flat(k_states, m_symbols);
  HmmParams theta = init ? *init : draw_from_priors(flat, rng);
  std::vector<double> pi = theta.pi.weights();
  Matrix A = theta.A.matrix();
  Matrix B = theta.B.matrix();

  int max_t = 1;
  for (const auto& s : dataset.sequences()) max_t = std::max(max_t, s.length());
  std::vector<double> alpha(static_cast<size_t>(max_t) * k_states);
  std::vector<double> beta(static_cast<size_t>(max_t) * k_states);
  std::vector<double> log_norms(max_t);
  std::vector<double> gamma(k_states);

  std::vector<double> pi_acc(k_states);
  Matrix a_acc(k_states, k_states), b_acc(k_states, m_symbols);

  auto normalize_row = [](std::span<double> row) {
    double sum = 0.0;
    for (double v : row) sum += v;
    if (sum <= 1e-12) {
      for (auto& v : row) v += 1e-6;
      sum = 0.0;
      for (double v : row) sum += v;
    }
    for (auto& v : row) v /= sum;
  };

  EmResult result{HmmParams(Simplex::normalized(pi), StochasticMatrix::normalized(A),
                            StochasticMatrix::normalized(B)),
                  {},
                  0,
                  false};

  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iters; ++it) {
    std::fill(pi_acc.begin(), pi_acc.end(), 0.0);
    a_acc = Matrix(k_states, k_states);
    b_acc = Matrix(k_states, m_symbols);
    double ll = 0.0;
    uint64_t steps = 0;

    for (const auto& seq : dataset.sequences()) {
      const auto& entries = seq.entries();
      const int t_len = seq.length();
      if (t_len == 0) continue;
      ll += forward_full_core(entries.data(), t_len, pi.data(), A, B, alpha.data(),
                              log_norms.data(), steps);

      // scaled backward pass sharing the forward normalizers
      double* beta_last = beta.data() + static_cast<size_t>(t_len - 1) * k_states;
      for (int i = 0; i < k_states; ++i) beta_last[i] = 1.0;
      for (int t = t_len - 2; t >= 0; --t) {
        const double* nxt = beta.data() + static_cast<size_t>(t + 1) * k_states;
        double* cur = beta.data() + static_cast<size_t>(t) * k_states;
        double norm = std::exp(log_norms[t + 1]);
        for (int i = 0; i < k_states; ++i) {
          double s = 0.0;
          for (int j = 0; j < k_states; ++j)
            s += A(i, j) * emission_or_one(B, j, entries[t + 1]) * nxt[j];
          cur[i] = s / norm;
        }
      }

      for (int t = 0; t < t_len; ++t) {
        const double* a_row = alpha.data() + static_cast<size_t>(t) * k_states;
        const double* b_row = beta.data() + static_cast<size_t>(t) * k_states;
        double sum = 0.0;
        for (int i = 0; i < k_states; ++i) {
          gamma[i] = a_row[i] * b_row[i];
          sum += gamma[i];
        }
        for (int i = 0; i < k_states; ++i) gamma[i] /= sum;
        if (t == 0)
          for (int i = 0; i < k_states; ++i) pi_acc[i] += gamma[i];
        if (entries[t] != kMissing)
          for (int i = 0; i < k_states; ++i) b_acc(i, entries[t]) += gamma[i];
        if (t + 1 < t_len) {
          const double* b_nxt = beta.data() + static_cast<size_t>(t + 1) * k_states;
          double norm = std::exp(log_norms[t + 1]);
          double xi_sum = 0.0;
          for (int i = 0; i < k_states; ++i)
            for (int j = 0; j < k_states; ++j)
              xi_sum += a_row[i] * A(i, j) * emission_or_one(B, j, entries[t + 1]) * b_nxt[j];
          for (int i = 0; i < k_states; ++i)
            for (int j = 0; j < k_states; ++j)
              a_acc(i, j) += a_row[i] * A(i, j) * emission_or_one(B, j, entries[t + 1]) * b_nxt[j] /
                             xi_sum;
          (void)norm;
        }
      }
    }

    result.loglik_trace.push_back(ll);
    result.iterations = it + 1;
    if (std::abs(ll - prev_ll) < tol) {
      result.converged = true;
      break;
    }
    prev_ll = ll;

    // M-step
    normalize_row(pi_acc);
    pi = pi_acc;
    for (int i = 0; i < k_states; ++i) normalize_row(a_acc.row(i));
    A = a_acc;
    for (int i = 0; i < k_states; ++i) normalize_row(b_acc.row(i));
    B = b_acc;
  }

  result.params = HmmParams(Simplex::normalized(pi), StochasticMatrix::normalized(A),
                            StochasticMatrix::normalized(B));
  return result;
}

std::vector<std::vector<int>> viterbi_decode(const Dataset& dataset, const HmmParams& params) {
  const int k_states = params.num_states();
  const Matrix& A = params.A.matrix();
  const Matrix& B = params.B.matrix();
  std::vector<double> log_pi(k_states);
  Matrix log_a(k_states, k_states);
  for (int i = 0; i < k_states; ++i) {
    log_pi[i] = std::log(params.pi[i]);
    for (int j = 0; j < k_states; ++j) log_a(i, j) = std::log(A(i, j));
  }
  auto log_emis = [&](int z, int y) { return y == kMissing ? 0.0 : std::log(B(z, y)); };

  std::vector<std::vector<int>> out;
  out.reserve(dataset.num_sequences());
  for (const auto& seq : dataset.sequences()) {
    const auto& entries = seq.entries();
    const int t_len = seq.length();
    if (t_len == 0) {
      out.emplace_back();
      continue;
    }
    Matrix score(t_len, k_states);
    std::vector<int> back(static_cast<size_t>(t_len) * k_states);
    for (int z = 0; z < k_states; ++z) score(0, z) = log_pi[z] + log_emis(z, entries[0]);
    for (int t = 1; t < t_len; ++t)
      for (int j = 0; j < k_states; ++j) {
        double best = -std::numeric_limits<double>::infinity();
        int arg = 0;
        for (int i = 0; i < k_states; ++i) {
          double v = score(t - 1, i) + log_a(i, j);
          if (v > best) {
            best = v;
            arg = i;
          }
        }
        score(t, j) = best + log_emis(j, entries[t]);
        back[static_cast<size_t>(t) * k_states + j] = arg;
      }
    std::vector<int> path(t_len);
    double best = -std::numeric_limits<double>::infinity();
    for (int z = 0; z < k_states; ++z)
      if (score(t_len - 1, z) > best) {
        best = score(t_len - 1, z);
        path[t_len - 1] = z;
      }
    for (int t = t_len - 1; t > 0; --t)
      path[t - 1] = back[static_cast<size_t>(t) * k_states + path[t]];
    out.push_back(std::move(path));
  }
  return out;
}

}  // namespace phmm
