#include "phmm/sequence.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace phmm {

ObservedSequence::ObservedSequence(std::vector<int> entries) : entries_(std::move(entries)) {
  for (size_t t = 0; t < entries_.size(); ++t) {
    int v = entries_[t];
    if (v == kMissing) continue;
    if (v < 0)
      throw std::invalid_argument("ObservedSequence: invalid symbol " + std::to_string(v) +
                                  " at position " + std::to_string(t));
    observed_index_.push_back(static_cast<int>(t));
    observed_symbols_.push_back(v);
  }
  for (size_t k = 0; k + 1 < observed_index_.size(); ++k)
    gaps_.push_back(observed_index_[k + 1] - observed_index_[k]);
}

ObservedSequence ObservedSequence::from_parts(int length, const std::vector<int>& observed_index,
                                              const std::vector<int>& symbols) {
  if (observed_index.size() != symbols.size())
    throw std::invalid_argument("from_parts: index/symbol size mismatch");
  std::vector<int> entries(length, kMissing);
  for (size_t k = 0; k < observed_index.size(); ++k) {
    int t = observed_index[k];
    if (t < 0 || t >= length) throw std::invalid_argument("from_parts: index out of range");
    entries[t] = symbols[k];
  }
  return ObservedSequence(std::move(entries));
}

Dataset::Dataset(std::vector<ObservedSequence> sequences, int num_states, int num_symbols)
    : sequences_(std::move(sequences)), num_states_(num_states), num_symbols_(num_symbols) {
  if (num_states_ < 1 || num_symbols_ < 1)
    throw std::invalid_argument("Dataset: alphabet sizes must be positive");
  for (size_t i = 0; i < sequences_.size(); ++i)
    for (int s : sequences_[i].observed_symbols())
      if (s >= num_symbols_)
        throw std::invalid_argument("Dataset: sequence " + std::to_string(i) + " has symbol " +
                                    std::to_string(s) + " >= M = " + std::to_string(num_symbols_));
}

long Dataset::total_positions() const {
  long n = 0;
  for (const auto& s : sequences_) n += s.length();
  return n;
}

long Dataset::total_observed() const {
  long n = 0;
  for (const auto& s : sequences_) n += s.num_observed();
  return n;
}

int Dataset::max_gap() const {
  int g = 0;
  for (const auto& s : sequences_)
    for (int d : s.gaps()) g = std::max(g, d);
  return g;
}

int Dataset::max_leading_offset() const {
  int g = 0;
  for (const auto& s : sequences_) g = std::max(g, s.leading_offset());
  return g;
}

double missing_rate(const Dataset& d) {
  long total = d.total_positions();
  if (total == 0) throw std::invalid_argument("missing_rate: dataset has no positions");
  return static_cast<double>(total - d.total_observed()) / static_cast<double>(total);
}

}  // namespace phmm
