#pragma once

#include <span>
#include <utility>
#include <vector>

#include "declab/sequence.hpp"

namespace declab {

/// An exact probability distribution over whole sequences, stored sorted by
/// sequence. Probabilities are nonnegative and sum to 1 within 1e-9;
/// sequences are unique. Zero-mass entries are allowed.
class DistributionTable {
public:
  static constexpr double kSumTolerance = 1e-9;

  using Entry = std::pair<TokenSequence, double>;

  explicit DistributionTable(std::vector<Entry> entries);

  std::span<const Entry> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  /// Probability of a sequence; 0 if absent.
  double probability(const TokenSequence& seq) const;

  const std::vector<Entry>& vec() const { return entries_; }

private:
  std::vector<Entry> entries_;
};

}  // namespace declab
