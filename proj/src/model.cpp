#include "phmm/model.hpp"

#include <cmath>
#include <sstream>

namespace phmm {

HmmParams::HmmParams(Simplex pi_in, StochasticMatrix a, StochasticMatrix b)
    : pi(std::move(pi_in)), A(std::move(a)), B(std::move(b)) {
  if (pi.size() != A.rows() || A.rows() != A.cols() || A.rows() != B.rows())
    throw std::invalid_argument("HmmParams: pi length, A dimensions and B row count must agree");
}

Priors::Priors(std::vector<double> pi_conc, Matrix a_conc, Matrix b_conc)
    : eta_pi(std::move(pi_conc)), eta_A(std::move(a_conc)), eta_B(std::move(b_conc)) {
  int k = static_cast<int>(eta_pi.size());
  if (k < 1) throw std::invalid_argument("Priors: empty eta_pi");
  if (eta_A.rows() != k || eta_A.cols() != k || eta_B.rows() != k || eta_B.cols() < 1)
    throw std::invalid_argument("Priors: dimension mismatch");
  for (double v : eta_pi)
    if (!(v > 0.0)) throw std::invalid_argument("Priors: eta_pi entries must be positive");
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j)
      if (!(eta_A(i, j) > 0.0)) throw std::invalid_argument("Priors: eta_A entries must be positive");
    for (int j = 0; j < eta_B.cols(); ++j)
      if (!(eta_B(i, j) > 0.0)) throw std::invalid_argument("Priors: eta_B entries must be positive");
  }
}

Priors Priors::flat(int num_states, int num_symbols, double c) {
  return Priors(std::vector<double>(num_states, c), Matrix(num_states, num_states, c),
                Matrix(num_states, num_symbols, c));
}

std::string ValidationReport::joined() const {
  std::ostringstream out;
  for (size_t i = 0; i < violations.size(); ++i) {
    if (i) out << "; ";
    out << violations[i];
  }
  return out.str();
}

namespace {

void check_row(std::span<const double> row, const std::string& label, ValidationReport& rep) {
  double sum = 0.0;
  for (size_t j = 0; j < row.size(); ++j) {
    if (!(row[j] >= 0.0)) {
      std::ostringstream msg;
      msg << label << ": entry " << j << " is negative (" << row[j] << ")";
      rep.violations.push_back(msg.str());
    }
    sum += row[j];
  }
  double deficit = sum - 1.0;
  if (std::abs(deficit) > kSimplexSlack) {
    std::ostringstream msg;
    msg << label << ": sum deviates from 1 by " << deficit;
    rep.violations.push_back(msg.str());
  }
}

}  // namespace

ValidationReport validate_params(const std::vector<double>& pi, const Matrix& A, const Matrix& B) {
  ValidationReport rep;
  int k = static_cast<int>(pi.size());
  if (k < 1) rep.violations.push_back("pi: empty");
  if (A.rows() != A.cols()) rep.violations.push_back("A: not square");
  if (A.rows() != k) rep.violations.push_back("A: row count does not match pi length");
  if (B.rows() != k) rep.violations.push_back("B: row count does not match pi length");
  if (B.cols() < 1) rep.violations.push_back("B: no symbol columns");

  check_row(pi, "pi", rep);
  for (int i = 0; i < A.rows(); ++i) check_row(A.row(i), "A row " + std::to_string(i), rep);
  for (int i = 0; i < B.rows(); ++i) check_row(B.row(i), "B row " + std::to_string(i), rep);
  return rep;
}

ValidationReport validate_params(const HmmParams& p) {
  return validate_params(p.pi.weights(), p.A.matrix(), p.B.matrix());
}

}  // namespace phmm
