#pragma once

#include <vector>

#include "phmm/model.hpp"

namespace phmm {

/// Sentinel marking a missing observation. Deliberately distinct from every
/// symbol index so the observed alphabet never grows a "missing" token.
inline constexpr int kMissing = -1;

/// One categorical sequence with per-position missing flags, plus the
/// derived observed-index view (positions t_1 < ... < t_K and their gaps).
class ObservedSequence {
 public:
  explicit ObservedSequence(std::vector<int> entries);

  /// Rebuilds a sequence from its observed-index decomposition.
  static ObservedSequence from_parts(int length, const std::vector<int>& observed_index,
                                     const std::vector<int>& symbols);

  int length() const { return static_cast<int>(entries_.size()); }
  int num_observed() const { return static_cast<int>(observed_index_.size()); }
  bool fully_missing() const { return observed_index_.empty(); }

  /// Number of missing positions before the first observation; only
  /// meaningful when the sequence is not fully missing.
  int leading_offset() const { return observed_index_.empty() ? 0 : observed_index_.front(); }

  const std::vector<int>& entries() const { return entries_; }
  const std::vector<int>& observed_index() const { return observed_index_; }
  const std::vector<int>& observed_symbols() const { return observed_symbols_; }
  /// gaps()[k] = observed_index()[k+1] - observed_index()[k], always >= 1.
  const std::vector<int>& gaps() const { return gaps_; }

  bool operator==(const ObservedSequence&) const = default;

 private:
  std::vector<int> entries_;
  std::vector<int> observed_index_;
  std::vector<int> observed_symbols_;
  std::vector<int> gaps_;
};

/// A collection of sequences over a shared latent alphabet of size
/// num_states and observed alphabet of size num_symbols.
class Dataset {
 public:
  Dataset(std::vector<ObservedSequence> sequences, int num_states, int num_symbols);

  int num_states() const { return num_states_; }
  int num_symbols() const { return num_symbols_; }
  int num_sequences() const { return static_cast<int>(sequences_.size()); }
  const std::vector<ObservedSequence>& sequences() const { return sequences_; }
  const ObservedSequence& sequence(int i) const { return sequences_[i]; }

  long total_positions() const;
  long total_observed() const;

  /// Largest gap between consecutive observations over all sequences (0 if
  /// no sequence has two observations).
  int max_gap() const;
  /// Largest leading offset t_1 - 1 over all sequences.
  int max_leading_offset() const;

 private:
  std::vector<ObservedSequence> sequences_;
  int num_states_;
  int num_symbols_;
};

/// Pooled fraction of missing entries |y_m| / (|y_m| + |y_o|).
double missing_rate(const Dataset& d);

}  // namespace phmm
