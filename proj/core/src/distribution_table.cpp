#include "declab/distribution_table.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "declab/errors.hpp"

namespace declab {

DistributionTable::DistributionTable(std::vector<Entry> entries)
    : entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end(),
            [](const Entry& a, const Entry& b) { return a.first < b.first; });
  double sum = 0.0;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const double p = entries_[i].second;
    if (!(p >= 0.0)) {
      throw InputError("distribution table entry " + std::to_string(i) +
                       " has negative or NaN probability");
    }
    if (i > 0 && entries_[i].first == entries_[i - 1].first) {
      throw InputError("duplicate sequence in distribution table");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw InputError("distribution table sums to " + std::to_string(sum) +
                     ", not 1 within 1e-9");
  }
}

double DistributionTable::probability(const TokenSequence& seq) const {
  auto it = std::lower_bound(
      entries_.begin(), entries_.end(), seq,
      [](const Entry& e, const TokenSequence& s) { return e.first < s; });
  if (it != entries_.end() && it->first == seq) return it->second;
  return 0.0;
}

}  // namespace declab
