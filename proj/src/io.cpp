#include "phmm/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "phmm/version.hpp"

namespace phmm {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  return in;
}

json load_json_file(const std::string& path) {
  auto in = open_in(path);
  json j;
  in >> j;
  return j;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

Matrix matrix_from_json(const json& rows) {
  if (!rows.is_array() || rows.empty()) throw std::runtime_error("expected a non-empty matrix");
  Matrix m(static_cast<int>(rows.size()), static_cast<int>(rows[0].size()));
  for (int i = 0; i < m.rows(); ++i) {
    if (static_cast<int>(rows[i].size()) != m.cols()) throw std::runtime_error("ragged matrix rows");
    for (int j = 0; j < m.cols(); ++j) m(i, j) = rows[i][j].get<double>();
  }
  return m;
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json stochastic_to_json(const StochasticMatrix& m) { return matrix_to_json(m.matrix()); }

HmmParams params_from_json(const json& j) {
  std::vector<double> pi = j.at("pi").get<std::vector<double>>();
  return HmmParams(Simplex::normalized(std::move(pi)),
                   StochasticMatrix::normalized(matrix_from_json(j.at("A"))),
                   StochasticMatrix::normalized(matrix_from_json(j.at("B"))));
}

json params_to_json(const HmmParams& p) {
  return json{{"pi", p.pi.weights()}, {"A", stochastic_to_json(p.A)}, {"B", stochastic_to_json(p.B)}};
}

void dump_json(const std::string& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << "\n";
}

}  // namespace

std::vector<std::string> table_header(uint64_t seed, const std::string& flag_echo) {
  return {std::string("# ") + kVersion, "# seed=" + std::to_string(seed), "# cmd=" + flag_echo};
}

Dataset load_dataset_csv(const std::string& path, int num_states, int num_symbols) {
  if (num_states < 1 || num_symbols < 1)
    throw std::invalid_argument("load_dataset_csv: alphabet sizes required for CSV input");
  auto in = open_in(path);
  std::vector<ObservedSequence> seqs;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {  // header row t0,t1,...
      header_seen = true;
      continue;
    }
    std::vector<int> entries;
    std::stringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) {
      if (cell == "NA")
        entries.push_back(kMissing);
      else
        entries.push_back(std::stoi(cell));
    }
    seqs.emplace_back(std::move(entries));
  }
  return Dataset(std::move(seqs), num_states, num_symbols);
}

void save_dataset_csv(const std::string& path, const Dataset& dataset,
                      const std::vector<std::string>& comments) {
  auto out = open_out(path);
  for (const auto& c : comments) out << c << "\n";
  int max_t = 0;
  for (const auto& s : dataset.sequences()) max_t = std::max(max_t, s.length());
  for (int t = 0; t < max_t; ++t) out << (t ? "," : "") << "t" << t;
  out << "\n";
  for (const auto& s : dataset.sequences()) {
    const auto& e = s.entries();
    for (size_t t = 0; t < e.size(); ++t) {
      if (t) out << ",";
      if (e[t] == kMissing)
        out << "NA";
      else
        out << e[t];
    }
    out << "\n";
  }
}

Dataset load_dataset_json(const std::string& path) {
  json j = load_json_file(path);
  int k = j.at("K").get<int>();
  int m = j.at("M").get<int>();
  std::vector<ObservedSequence> seqs;
  for (const auto& row : j.at("sequences")) {
    std::vector<int> entries;
    entries.reserve(row.size());
    for (const auto& cell : row) entries.push_back(cell.is_null() ? kMissing : cell.get<int>());
    seqs.emplace_back(std::move(entries));
  }
  return Dataset(std::move(seqs), k, m);
}

void save_dataset_json(const std::string& path, const Dataset& dataset) {
  json rows = json::array();
  for (const auto& s : dataset.sequences()) {
    json row = json::array();
    for (int v : s.entries()) {
      if (v == kMissing)
        row.push_back(nullptr);
      else
        row.push_back(v);
    }
    rows.push_back(row);
  }
  dump_json(path, json{{"K", dataset.num_states()},
                       {"M", dataset.num_symbols()},
                       {"sequences", rows}});
}

Dataset load_dataset(const std::string& path, int num_states, int num_symbols) {
  if (ends_with(path, ".json")) return load_dataset_json(path);
  return load_dataset_csv(path, num_states, num_symbols);
}

HmmParams load_params_json(const std::string& path) { return params_from_json(load_json_file(path)); }

void save_params_json(const std::string& path, const HmmParams& params) {
  dump_json(path, params_to_json(params));
}

Priors load_priors_json(const std::string& path) {
  json j = load_json_file(path);
  return Priors(j.at("eta_pi").get<std::vector<double>>(), matrix_from_json(j.at("eta_A")),
                matrix_from_json(j.at("eta_B")));
}

GroundTruth load_truth_json(const std::string& path) {
  json j = load_json_file(path);
  GroundTruth truth{params_from_json(j), {}};
  if (j.contains("latents")) truth.latents = j.at("latents").get<std::vector<std::vector<int>>>();
  return truth;
}

void save_truth_json(const std::string& path, const GroundTruth& truth) {
  json j = params_to_json(truth.params);
  j["latents"] = truth.latents;
  dump_json(path, j);
}

void save_trace_csv(const std::string& path, const ChainTrace& trace,
                    const std::vector<std::string>& comments) {
  auto out = open_out(path);
  for (const auto& c : comments) out << c << "\n";
  const int k = trace.num_states, m = trace.num_symbols;
  out << "iter";
  for (int i = 0; i < k; ++i) out << ",pi_" << i;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < k; ++j) out << ",A_" << i << j;
  for (int i = 0; i < k; ++i)
    for (int j = 0; j < m; ++j) out << ",B_" << i << j;
  out << ",loglik,ms_forward,ms_params\n";
  for (const auto& d : trace.draws) {
    out << d.iter;
    for (int i = 0; i < k; ++i) out << "," << fmt(d.params.pi[i]);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) out << "," << fmt(d.params.A(i, j));
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < m; ++j) out << "," << fmt(d.params.B(i, j));
    out << "," << fmt(d.loglik) << "," << fmt(d.ms_forward) << "," << fmt(d.ms_params) << "\n";
  }
}

void save_trace_json(const std::string& path, const ChainTrace& trace) {
  json draws = json::array();
  for (const auto& d : trace.draws) {
    json row{{"iter", d.iter},
             {"pi", d.params.pi.weights()},
             {"A", stochastic_to_json(d.params.A)},
             {"B", stochastic_to_json(d.params.B)},
             {"loglik", d.loglik},
             {"ms_forward", d.ms_forward},
             {"ms_params", d.ms_params}};
    draws.push_back(std::move(row));
  }
  dump_json(path, json{{"version", kVersion},
                       {"sampler", trace.sampler},
                       {"K", trace.num_states},
                       {"M", trace.num_symbols},
                       {"iterations", trace.config.iterations},
                       {"burn_in", trace.config.burn_in},
                       {"thin", trace.config.thin},
                       {"seed", trace.config.seed},
                       {"draws", draws}});
}

ChainTrace load_trace_json(const std::string& path) {
  json j = load_json_file(path);
  ChainTrace trace;
  trace.num_states = j.at("K").get<int>();
  trace.num_symbols = j.at("M").get<int>();
  trace.sampler = j.value("sampler", "");
  trace.config.iterations = j.at("iterations").get<int>();
  trace.config.burn_in = j.at("burn_in").get<int>();
  trace.config.thin = j.at("thin").get<int>();
  trace.config.seed = j.at("seed").get<uint64_t>();
  for (const auto& row : j.at("draws")) {
    RetainedDraw d{row.at("iter").get<int>(), params_from_json(row),
                   row.value("loglik", 0.0), row.value("ms_forward", 0.0),
                   row.value("ms_params", 0.0),
                   {}};
    trace.draws.push_back(std::move(d));
  }
  return trace;
}

namespace {

std::string opt_cell(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

void save_report_csv(const std::string& path, const SamplerReport& rep,
                     const std::vector<std::string>& comments) {
  auto out = open_out(path);
  for (const auto& c : comments) out << c << "\n";
  out << "sampler,time_per_1000_iters,median_ess_per_iter,median_ess_per_sec,"
         "init_mse,trans_mse,emis_mse,latent_accuracy,cv_prediction_accuracy\n";
  out << rep.sampler << "," << fmt(rep.time_per_1000_iters) << "," << opt_cell(rep.median_ess_per_iter)
      << "," << opt_cell(rep.median_ess_per_sec) << "," << opt_cell(rep.init_mse) << ","
      << opt_cell(rep.trans_mse) << "," << opt_cell(rep.emis_mse) << ","
      << opt_cell(rep.latent_accuracy) << "," << opt_cell(rep.cv_prediction_accuracy) << "\n";
}

void save_report_json(const std::string& path, const SamplerReport& rep) {
  dump_json(path, json{{"sampler", rep.sampler},
                       {"time_per_1000_iters", rep.time_per_1000_iters},
                       {"median_ess_per_iter", opt_json(rep.median_ess_per_iter)},
                       {"median_ess_per_sec", opt_json(rep.median_ess_per_sec)},
                       {"init_mse", opt_json(rep.init_mse)},
                       {"trans_mse", opt_json(rep.trans_mse)},
                       {"emis_mse", opt_json(rep.emis_mse)},
                       {"latent_accuracy", opt_json(rep.latent_accuracy)},
                       {"cv_prediction_accuracy", opt_json(rep.cv_prediction_accuracy)}});
}

void save_loglik_trace_csv(const std::string& path, const std::vector<double>& loglik,
                           const std::vector<std::string>& comments) {
  auto out = open_out(path);
  for (const auto& c : comments) out << c << "\n";
  out << "iter,loglik\n";
  for (size_t i = 0; i < loglik.size(); ++i) out << (i + 1) << "," << fmt(loglik[i]) << "\n";
}

void save_forecast_json(const std::string& path, int W, int draws,
                        const std::vector<std::vector<std::vector<int>>>& paths_per_seq) {
  json seqs = json::array();
  for (size_t i = 0; i < paths_per_seq.size(); ++i)
    seqs.push_back(json{{"index", i}, {"paths", paths_per_seq[i]}});
  dump_json(path, json{{"mode", "forecast"}, {"W", W}, {"draws", draws}, {"sequences", seqs}});
}

void save_decode_json(const std::string& path, int draws, const Dataset& dataset,
                      const std::vector<std::vector<LatentDraw>>& draws_per_seq) {
  json seqs = json::array();
  for (size_t i = 0; i < draws_per_seq.size(); ++i)
    seqs.push_back(json{{"index", i},
                        {"observed_index", dataset.sequence(static_cast<int>(i)).observed_index()},
                        {"samples", draws_per_seq[i]}});
  dump_json(path, json{{"mode", "decode"}, {"draws", draws}, {"sequences", seqs}});
}

void save_impute_json(const std::string& path, int draws, int num_symbols,
                      const std::vector<ImputationDraws>& imputations) {
  json seqs = json::array();
  for (size_t i = 0; i < imputations.size(); ++i) {
    auto hists = imputations[i].histograms(num_symbols);
    json positions = json::array();
    for (size_t p = 0; p < imputations[i].missing_positions.size(); ++p)
      positions.push_back(json{{"t", imputations[i].missing_positions[p]}, {"histogram", hists[p]}});
    seqs.push_back(json{{"index", i}, {"positions", positions}});
  }
  dump_json(path, json{{"mode", "impute"}, {"draws", draws}, {"sequences", seqs}});
}

}  // namespace phmm
