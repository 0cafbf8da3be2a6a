#pragma once

#include <optional>
#include <string>
#include <vector>

#include "phmm/matrix.hpp"
#include "phmm/simplex.hpp"

namespace phmm {

/// Full discrete-HMM parameter set: initial distribution pi (length K),
/// transition matrix A (K x K), emission matrix B (K x M) with
/// B(i, j) = P(y = j | z = i).
struct HmmParams {
  Simplex pi;
  StochasticMatrix A;
  StochasticMatrix B;

  HmmParams(Simplex pi_in, StochasticMatrix a, StochasticMatrix b);

  int num_states() const { return pi.size(); }
  int num_symbols() const { return B.cols(); }

  bool operator==(const HmmParams&) const = default;
};

/// Dirichlet concentration parameters for pi, the rows of A, and the rows
/// of B. All entries strictly positive.
struct Priors {
  std::vector<double> eta_pi;
  Matrix eta_A;
  Matrix eta_B;

  Priors(std::vector<double> pi_conc, Matrix a_conc, Matrix b_conc);

  /// Flat priors: every concentration equal to `c`.
  static Priors flat(int num_states, int num_symbols, double c = 1.0);

  int num_states() const { return static_cast<int>(eta_pi.size()); }
  int num_symbols() const { return eta_B.cols(); }
};

/// Outcome of validate_params: one message per violation, empty when the
/// raw input obeys all simplex and dimension constraints.
struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
  std::string joined() const;
};

/// Checks a raw (pi, A, B) triple without aborting: negative entries, row
/// sums outside the renormalization tolerance, and dimension mismatches
/// are each reported with the offending row and deficit.
ValidationReport validate_params(const std::vector<double>& pi, const Matrix& A, const Matrix& B);

/// Re-checks an already constructed parameter set (always clean unless the
/// object was produced by unchecked arithmetic).
ValidationReport validate_params(const HmmParams& p);

/// Generating parameters and latent paths kept alongside a simulated
/// dataset for scoring.
struct GroundTruth {
  HmmParams params;
  std::vector<std::vector<int>> latents;
};

}  // namespace phmm
