// Command-line front end: simulate / fit / benchmark / predict.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "phmm/benchmark.hpp"
#include "phmm/io.hpp"
#include "phmm/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace phmm;

namespace {

/// Removes this run's outputs when a command fails partway.
class OutputGuard {
 public:
  void track(const std::string& path) { paths_.push_back(path); }
  void commit() { committed_ = true; }
  ~OutputGuard() {
    if (committed_) return;
    for (const auto& p : paths_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }

 private:
  std::vector<std::string> paths_;
  bool committed_ = false;
};

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
  json j;
  in >> j;
  return j;
}

// config file supplies any flag; explicit command-line flags win
template <typename T>
void merge(const CLI::App* cmd, const json& cfg, const std::string& flag, T& var) {
  if (cmd->count("--" + flag) > 0) return;
  if (cfg.contains(flag)) var = cfg.at(flag).get<T>();
}

std::vector<double> parse_grid(const std::string& csv) {
  std::vector<double> grid;
  std::stringstream ss(csv);
  std::string cell;
  while (std::getline(ss, cell, ',')) grid.push_back(std::stod(cell));
  if (grid.empty()) throw CLI::ValidationError("--p-grid", "empty grid");
  return grid;
}

std::vector<std::string> parse_samplers(const std::string& csv) {
  if (csv == "all") return {"collapsed", "partial", "vanilla"};
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (cell != "collapsed" && cell != "partial" && cell != "vanilla" && cell != "em")
      throw CLI::ValidationError("--samplers", "unknown sampler " + cell);
    out.push_back(cell);
  }
  return out;
}

HmmParams resolve_params(const std::string& spec, int k, int m, uint64_t seed) {
  if (spec == "paper-default") {
    if ((k != 0 && k != 3) || (m != 0 && m != 3))
      throw CLI::ValidationError("--params", "the built-in parameterization has K = M = 3");
    return benchmark_params();
  }
  if (spec == "random") {
    if (k < 1 || m < 1)
      throw CLI::ValidationError("--params", "--K and --M are required with random parameters");
    RngStream rng(seed, 999);
    return draw_from_priors(Priors::flat(k, m), rng);
  }
  return load_params_json(spec);
}

int jobs_cap(int jobs) {
  if (const char* env = std::getenv("PHMM_THREADS")) {
    int cap = std::atoi(env);
    if (cap >= 1) jobs = std::min(jobs, cap);
  }
  return std::max(1, jobs);
}

struct FitFlags {
  std::string sampler = "collapsed";
  std::string data;
  std::string truth;
  std::string priors;
  std::string init;
  std::string out = ".";
  int k = 0, m = 0;
  int iters = 5000, burn_in = 2500, thin = 1;
  double mh_concentration = 200.0;
  int mh_repeats = 8;
  std::string mh_proposal = "surrogate";
  double tol = 1e-6;
  int restarts = 1;
  double cv_mask = 0.0;
  int cv_folds = 3;
  uint64_t seed = 0;
};

std::string fit_echo(const FitFlags& f) {
  std::ostringstream s;
  s << "fit --sampler " << f.sampler << " --data " << f.data << " --iters " << f.iters
    << " --burn-in " << f.burn_in << " --thin " << f.thin << " --seed " << f.seed;
  return s.str();
}

int cmd_fit(const FitFlags& f) {
  Dataset data = load_dataset(f.data, f.k, f.m);
  std::optional<GroundTruth> truth;
  if (!f.truth.empty()) truth = load_truth_json(f.truth);
  std::optional<HmmParams> init;
  if (!f.init.empty() && f.init != "random") init = load_params_json(f.init);

  fs::create_directories(f.out);
  OutputGuard guard;
  auto comments = table_header(f.seed, fit_echo(f));

  if (f.sampler == "em") {
    auto t0 = std::chrono::steady_clock::now();
    std::optional<EmResult> best_run;
    double best_ll = -std::numeric_limits<double>::infinity();
    for (int r = 0; r < std::max(1, f.restarts); ++r) {
      EmResult em = run_em(data, init, f.iters, f.tol, f.seed + static_cast<uint64_t>(r));
      if (em.loglik_trace.back() > best_ll) {
        best_ll = em.loglik_trace.back();
        best_run = std::move(em);
      }
    }
    EmResult& best = *best_run;
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::string params_path = f.out + "/em_params.json";
    std::string ll_path = f.out + "/em_loglik.csv";
    guard.track(params_path);
    guard.track(ll_path);
    save_params_json(params_path, best.params);
    save_loglik_trace_csv(ll_path, best.loglik_trace, comments);
    SamplerReport rep = report_em(best, data, truth, secs);
    guard.track(f.out + "/report.csv");
    guard.track(f.out + "/report.json");
    save_report_csv(f.out + "/report.csv", rep, comments);
    save_report_json(f.out + "/report.json", rep);
    guard.commit();
    std::cout << "em: " << best.iterations << " iterations, loglik " << best_ll
              << (best.converged ? " (converged)" : " (max iterations)") << "\n";
    return 0;
  }

  SamplerKind kind;
  if (f.sampler == "collapsed")
    kind = SamplerKind::Collapsed;
  else if (f.sampler == "partial")
    kind = SamplerKind::Partial;
  else if (f.sampler == "vanilla")
    kind = SamplerKind::Vanilla;
  else
    throw CLI::ValidationError("--sampler", "unknown sampler " + f.sampler);

  Priors priors = f.priors.empty() ? Priors::flat(data.num_states(), data.num_symbols())
                                   : load_priors_json(f.priors);
  SamplerConfig config;
  config.iterations = f.iters;
  config.burn_in = f.burn_in;
  config.thin = f.thin;
  config.mh_concentration = f.mh_concentration;
  config.mh_repeats = f.mh_repeats;
  config.kernel =
      f.mh_proposal == "walk" ? ProposalKernel::RandomWalk : ProposalKernel::Surrogate;
  config.seed = f.seed;

  ChainTrace trace = run_sampler(kind, data, priors, config, init);
  SamplerReport rep = report(trace, truth);
  if (f.cv_mask > 0.0) {
    RngStream cv_rng(f.seed, 424242);
    rep.cv_prediction_accuracy =
        cross_validated_accuracy(data, kind, config, f.cv_mask, f.cv_folds, cv_rng);
  }

  for (const char* name : {"/trace.csv", "/trace.json", "/report.csv", "/report.json"})
    guard.track(f.out + name);
  save_trace_csv(f.out + "/trace.csv", trace, comments);
  save_trace_json(f.out + "/trace.json", trace);
  save_report_csv(f.out + "/report.csv", rep, comments);
  save_report_json(f.out + "/report.json", rep);
  guard.commit();

  std::cout << f.sampler << ": " << trace.draws.size() << " retained draws, time/1000 iters "
            << rep.time_per_1000_iters << " s";
  if (rep.median_ess_per_iter) std::cout << ", median ESS/iter " << *rep.median_ess_per_iter;
  if (rep.latent_accuracy) std::cout << ", latent accuracy " << *rep.latent_accuracy;
  std::cout << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(kVersion) + " - Bayesian hidden Markov models with missing observations"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON file supplying any flag (flags override it)");

  // ---- simulate ----
  auto* sim = app.add_subcommand("simulate", "generate synthetic sequences with missing entries");
  struct {
    int n = 500, T = 20, k = 0, m = 0;
    std::string params = "paper-default";
    bool paper_default = false;
    std::string missing = "random";
    double p = 0.0;
    uint64_t seed = 0;
    std::string out = ".";
  } sf;
  sim->add_option("--n", sf.n, "number of sequences");
  sim->add_option("--T", sf.T, "sequence length");
  sim->add_option("--K", sf.k, "latent alphabet size (random params)");
  sim->add_option("--M", sf.m, "observed alphabet size (random params)");
  sim->add_option("--params", sf.params, "paper-default | random | <params.json>");
  sim->add_flag("--paper-default", sf.paper_default, "use the built-in parameterization");
  sim->add_option("--missing", sf.missing, "random | block")
      ->check(CLI::IsMember({"random", "block"}));
  sim->add_option("--p", sf.p, "missing probability");
  sim->add_option("--seed", sf.seed, "random seed");
  sim->add_option("--out", sf.out, "output directory");

  // ---- fit ----
  auto* fit = app.add_subcommand("fit", "run a sampler or EM on a dataset");
  FitFlags ff;
  fit->add_option("--sampler", ff.sampler, "collapsed | partial | vanilla | em")
      ->check(CLI::IsMember({"collapsed", "partial", "vanilla", "em"}));
  fit->add_option("--data", ff.data, "dataset file (.json or .csv)")->required();
  fit->add_option("--truth", ff.truth, "ground-truth JSON for scoring");
  fit->add_option("--priors", ff.priors, "priors JSON (default: flat)");
  fit->add_option("--init", ff.init, "initial parameters JSON (default: prior draw)");
  fit->add_option("--K", ff.k, "latent alphabet size (CSV input)");
  fit->add_option("--M", ff.m, "observed alphabet size (CSV input)");
  fit->add_option("--iters", ff.iters, "iterations (EM: max iterations)");
  fit->add_option("--burn-in", ff.burn_in, "burn-in iterations");
  fit->add_option("--thin", ff.thin, "thinning stride");
  fit->add_option("--mh-concentration", ff.mh_concentration, "Dirichlet proposal concentration");
  fit->add_option("--mh-repeats", ff.mh_repeats, "Metropolis sweeps per iteration");
  fit->add_option("--mh-proposal", ff.mh_proposal, "surrogate | walk")
      ->check(CLI::IsMember({"surrogate", "walk"}));
  fit->add_option("--tol", ff.tol, "EM convergence tolerance");
  fit->add_option("--restarts", ff.restarts, "EM restarts, best kept");
  fit->add_option("--cv-mask", ff.cv_mask, "cross-validation mask fraction (0 = off)");
  fit->add_option("--cv-folds", ff.cv_folds, "cross-validation folds");
  fit->add_option("--seed", ff.seed, "random seed");
  fit->add_option("--out", ff.out, "output directory");

  // ---- benchmark ----
  auto* bench = app.add_subcommand("benchmark", "sweep missing rates and samplers");
  struct {
    int n = 500, T = 20;
    std::string params = "paper-default";
    std::string missing = "random";
    std::string p_grid = "0,0.1,0.3,0.5,0.7,0.9";
    std::string samplers = "all";
    int iters = 5000, burn_in = 2500, thin = 1;
    double mh_concentration = 200.0;
    int mh_repeats = 8;
    std::string mh_proposal = "surrogate";
    uint64_t seed = 0;
    int replicates = 1, jobs = 1;
    std::string out = "benchmark.csv";
  } bf;
  bench->add_option("--n", bf.n, "number of sequences");
  bench->add_option("--T", bf.T, "sequence length");
  bench->add_option("--params", bf.params, "paper-default | <params.json>");
  bench->add_option("--missing", bf.missing, "random | block")
      ->check(CLI::IsMember({"random", "block"}));
  bench->add_option("--p-grid", bf.p_grid, "comma-separated missing probabilities");
  bench->add_option("--samplers", bf.samplers, "all | comma list of collapsed,partial,vanilla,em");
  bench->add_option("--iters", bf.iters, "iterations per cell");
  bench->add_option("--burn-in", bf.burn_in, "burn-in iterations");
  bench->add_option("--thin", bf.thin, "thinning stride");
  bench->add_option("--mh-concentration", bf.mh_concentration, "Dirichlet proposal concentration");
  bench->add_option("--mh-repeats", bf.mh_repeats, "Metropolis sweeps per iteration");
  bench->add_option("--mh-proposal", bf.mh_proposal, "surrogate | walk")
      ->check(CLI::IsMember({"surrogate", "walk"}));
  bench->add_option("--seed", bf.seed, "base seed; replicate r uses seed+r");
  bench->add_option("--replicates", bf.replicates, "independent replicates");
  bench->add_option("--jobs", bf.jobs, "parallel cells (capped by PHMM_THREADS)");
  bench->add_option("--out", bf.out, "output CSV table");

  // ---- predict ----
  auto* pred = app.add_subcommand("predict", "forecast / decode / impute from a trace");
  struct {
    std::string mode = "forecast";
    std::string trace;
    std::string data;
    int w = 1, draws = 100;
    uint64_t seed = 0;
    std::string out = "prediction.json";
  } pf;
  pred->add_option("--mode", pf.mode, "forecast | decode | impute")
      ->check(CLI::IsMember({"forecast", "decode", "impute"}));
  pred->add_option("--trace", pf.trace, "trace JSON from fit")->required();
  pred->add_option("--data", pf.data, "sequences file (.json or .csv)")->required();
  pred->add_option("--W", pf.w, "forecast horizon");
  pred->add_option("--draws", pf.draws, "posterior-predictive draws");
  pred->add_option("--seed", pf.seed, "random seed");
  pred->add_option("--out", pf.out, "output JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    json cfg = load_config(config_path);

    if (sim->parsed()) {
      merge(sim, cfg, "n", sf.n);
      merge(sim, cfg, "T", sf.T);
      merge(sim, cfg, "K", sf.k);
      merge(sim, cfg, "M", sf.m);
      merge(sim, cfg, "params", sf.params);
      merge(sim, cfg, "missing", sf.missing);
      merge(sim, cfg, "p", sf.p);
      merge(sim, cfg, "seed", sf.seed);
      merge(sim, cfg, "out", sf.out);
      if (sf.paper_default) sf.params = "paper-default";
      if (sf.p < 0.0 || sf.p > 1.0) throw CLI::ValidationError("--p", "p outside [0,1]");

      HmmParams params = resolve_params(sf.params, sf.k, sf.m, sf.seed);
      RngStream value_stream(sf.seed, 1);
      auto [complete, latents] = generate(params, sf.n, sf.T, value_stream);
      RngStream mask_stream(sf.seed, 2);
      Dataset masked = sf.missing == "random" ? apply_random_missing(complete, sf.p, mask_stream)
                                              : apply_blockwise_missing(complete, sf.p, mask_stream);

      fs::create_directories(sf.out);
      OutputGuard guard;
      std::ostringstream echo;
      echo << "simulate --n " << sf.n << " --T " << sf.T << " --params " << sf.params
           << " --missing " << sf.missing << " --p " << sf.p << " --seed " << sf.seed;
      for (const char* name : {"/dataset.csv", "/dataset.json", "/truth.json"})
        guard.track(sf.out + name);
      save_dataset_csv(sf.out + "/dataset.csv", masked, table_header(sf.seed, echo.str()));
      save_dataset_json(sf.out + "/dataset.json", masked);
      save_truth_json(sf.out + "/truth.json", GroundTruth{params, latents});
      guard.commit();
      std::cout << "wrote " << sf.out << "/dataset.{csv,json} and truth.json; missing rate "
                << missing_rate(masked) << "\n";
      return 0;
    }

    if (fit->parsed()) {
      merge(fit, cfg, "sampler", ff.sampler);
      merge(fit, cfg, "data", ff.data);
      merge(fit, cfg, "truth", ff.truth);
      merge(fit, cfg, "priors", ff.priors);
      merge(fit, cfg, "init", ff.init);
      merge(fit, cfg, "K", ff.k);
      merge(fit, cfg, "M", ff.m);
      merge(fit, cfg, "iters", ff.iters);
      merge(fit, cfg, "burn-in", ff.burn_in);
      merge(fit, cfg, "thin", ff.thin);
      merge(fit, cfg, "mh-concentration", ff.mh_concentration);
      merge(fit, cfg, "mh-repeats", ff.mh_repeats);
      merge(fit, cfg, "mh-proposal", ff.mh_proposal);
      merge(fit, cfg, "tol", ff.tol);
      merge(fit, cfg, "restarts", ff.restarts);
      merge(fit, cfg, "cv-mask", ff.cv_mask);
      merge(fit, cfg, "cv-folds", ff.cv_folds);
      merge(fit, cfg, "seed", ff.seed);
      merge(fit, cfg, "out", ff.out);
      return cmd_fit(ff);
    }

    if (bench->parsed()) {
      merge(bench, cfg, "n", bf.n);
      merge(bench, cfg, "T", bf.T);
      merge(bench, cfg, "params", bf.params);
      merge(bench, cfg, "missing", bf.missing);
      merge(bench, cfg, "p-grid", bf.p_grid);
      merge(bench, cfg, "samplers", bf.samplers);
      merge(bench, cfg, "iters", bf.iters);
      merge(bench, cfg, "burn-in", bf.burn_in);
      merge(bench, cfg, "thin", bf.thin);
      merge(bench, cfg, "mh-concentration", bf.mh_concentration);
      merge(bench, cfg, "mh-repeats", bf.mh_repeats);
      merge(bench, cfg, "mh-proposal", bf.mh_proposal);
      merge(bench, cfg, "seed", bf.seed);
      merge(bench, cfg, "replicates", bf.replicates);
      merge(bench, cfg, "jobs", bf.jobs);
      merge(bench, cfg, "out", bf.out);

      BenchmarkOptions opts;
      opts.params = bf.params == "paper-default" ? benchmark_params() : load_params_json(bf.params);
      opts.n = bf.n;
      opts.T = bf.T;
      opts.missing = bf.missing;
      opts.p_grid = parse_grid(bf.p_grid);
      opts.samplers = parse_samplers(bf.samplers);
      opts.iterations = bf.iters;
      opts.burn_in = bf.burn_in;
      opts.thin = bf.thin;
      opts.mh_concentration = bf.mh_concentration;
      opts.mh_repeats = bf.mh_repeats;
      opts.mh_proposal = bf.mh_proposal;
      opts.seed = bf.seed;
      opts.replicates = bf.replicates;
      opts.jobs = jobs_cap(bf.jobs);

      auto rows = run_benchmark(opts);
      OutputGuard guard;
      guard.track(bf.out);
      std::ostringstream echo;
      echo << "benchmark --n " << bf.n << " --T " << bf.T << " --missing " << bf.missing
           << " --p-grid " << bf.p_grid << " --samplers " << bf.samplers << " --iters " << bf.iters
           << " --burn-in " << bf.burn_in << " --seed " << bf.seed << " --replicates "
           << bf.replicates;
      save_benchmark_csv(bf.out, rows, table_header(bf.seed, echo.str()));
      guard.commit();
      std::cout << "wrote " << rows.size() << " rows to " << bf.out << "\n";
      return 0;
    }

    if (pred->parsed()) {
      merge(pred, cfg, "mode", pf.mode);
      merge(pred, cfg, "trace", pf.trace);
      merge(pred, cfg, "data", pf.data);
      merge(pred, cfg, "W", pf.w);
      merge(pred, cfg, "draws", pf.draws);
      merge(pred, cfg, "seed", pf.seed);
      merge(pred, cfg, "out", pf.out);

      ChainTrace trace = load_trace_json(pf.trace);
      Dataset data = load_dataset(pf.data, trace.num_states, trace.num_symbols);
      RngStream root(pf.seed, 0);
      OutputGuard guard;
      guard.track(pf.out);

      if (pf.mode == "forecast") {
        std::vector<std::vector<std::vector<int>>> all;
        for (int i = 0; i < data.num_sequences(); ++i) {
          RngStream rng = root.substream(i);
          all.push_back(forecast(trace, data.sequence(i), pf.w, pf.draws, rng));
        }
        save_forecast_json(pf.out, pf.w, pf.draws, all);
      } else if (pf.mode == "decode") {
        std::vector<std::vector<LatentDraw>> all;
        for (int i = 0; i < data.num_sequences(); ++i) {
          RngStream rng = root.substream(i);
          all.push_back(decode_new(trace, data.sequence(i), pf.draws, rng));
        }
        save_decode_json(pf.out, pf.draws, data, all);
      } else {
        std::vector<ImputationDraws> all;
        for (int i = 0; i < data.num_sequences(); ++i) {
          RngStream rng = root.substream(i);
          all.push_back(impute_missing(trace, data.sequence(i), pf.draws, rng));
        }
        save_impute_json(pf.out, pf.draws, trace.num_symbols, all);
      }
      guard.commit();
      std::cout << "wrote " << pf.out << "\n";
      return 0;
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
