#pragma once

#include <span>
#include <vector>

namespace declab {

/// One step's probabilities over the vocabulary. Entries are in [0,1] and sum
/// to 1 within kSumTolerance; both are checked at construction.
class ConditionalDistribution {
public:
  static constexpr double kSumTolerance = 1e-9;

  explicit ConditionalDistribution(std::vector<double> probs);

  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  std::span<const double> probs() const { return probs_; }
  const std::vector<double>& vec() const { return probs_; }

  /// Index of the largest probability; ties break to the lowest index.
  std::size_t argmax() const;

  friend bool operator==(const ConditionalDistribution&,
                         const ConditionalDistribution&) = default;

private:
  std::vector<double> probs_;
};

}  // namespace declab
