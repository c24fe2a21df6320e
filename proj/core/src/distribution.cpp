#include "declab/distribution.hpp"

#include <cmath>
#include <string>

#include "declab/errors.hpp"

namespace declab {

ConditionalDistribution::ConditionalDistribution(std::vector<double> probs)
    : probs_(std::move(probs)) {
  if (probs_.empty()) {
    throw InputError("conditional distribution must not be empty");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    const double p = probs_[i];
    if (!(p >= 0.0 && p <= 1.0)) {  // also rejects NaN
      throw InputError("probability at index " + std::to_string(i) + " is " +
                       std::to_string(p) + ", outside [0,1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw InputError("probabilities sum to " + std::to_string(sum) +
                     ", not 1 within 1e-9");
  }
}

std::size_t ConditionalDistribution::argmax() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs_.size(); ++i) {
    if (probs_[i] > probs_[best]) best = i;
  }
  return best;
}

}  // namespace declab
