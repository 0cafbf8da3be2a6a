#pragma once

#include <string>

#include "phmm/diagnostics.hpp"
#include "phmm/prediction.hpp"

namespace phmm {

/// Comment lines ("# ...") written at the top of every CSV table:
/// version, seed, and a flag echo.
std::vector<std::string> table_header(uint64_t seed, const std::string& flag_echo);

// --- datasets ---------------------------------------------------------
// CSV: one row per sequence, cells are symbol indices or NA, header row
// t0,t1,...; rows may be ragged. The alphabet sizes travel out of band.
// JSON: {"K":int,"M":int,"sequences":[[int|null,...],...]}.

Dataset load_dataset_csv(const std::string& path, int num_states, int num_symbols);
void save_dataset_csv(const std::string& path, const Dataset& dataset,
                      const std::vector<std::string>& comments);
Dataset load_dataset_json(const std::string& path);
void save_dataset_json(const std::string& path, const Dataset& dataset);

/// Dispatches on the file extension (.csv needs the alphabet sizes).
Dataset load_dataset(const std::string& path, int num_states = 0, int num_symbols = 0);

// --- parameters, priors, truth ----------------------------------------

HmmParams load_params_json(const std::string& path);
void save_params_json(const std::string& path, const HmmParams& params);

Priors load_priors_json(const std::string& path);

GroundTruth load_truth_json(const std::string& path);
void save_truth_json(const std::string& path, const GroundTruth& truth);

// --- traces ------------------------------------------------------------
// CSV columns: iter, pi_0.., A_00.., B_00.., loglik, ms_forward, ms_params.

void save_trace_csv(const std::string& path, const ChainTrace& trace,
                    const std::vector<std::string>& comments);
void save_trace_json(const std::string& path, const ChainTrace& trace);
ChainTrace load_trace_json(const std::string& path);

// --- reports and benchmark tables ---------------------------------------

void save_report_csv(const std::string& path, const SamplerReport& rep,
                     const std::vector<std::string>& comments);
void save_report_json(const std::string& path, const SamplerReport& rep);

void save_loglik_trace_csv(const std::string& path, const std::vector<double>& loglik,
                           const std::vector<std::string>& comments);

// --- prediction outputs --------------------------------------------------

void save_forecast_json(const std::string& path, int W, int draws,
                        const std::vector<std::vector<std::vector<int>>>& paths_per_seq);
void save_decode_json(const std::string& path, int draws, const Dataset& dataset,
                      const std::vector<std::vector<LatentDraw>>& draws_per_seq);
void save_impute_json(const std::string& path, int draws, int num_symbols,
                      const std::vector<ImputationDraws>& imputations);

}  // namespace phmm
