#pragma once

#include <vector>

#include "declab/language_model.hpp"

namespace declab {

inline constexpr std::size_t kDefaultEnumerationLimit = 1'000'000;

/// Joint log-likelihood (nats) of x under the model, conditioned on the
/// context: sum of per-step conditional logs. -inf if any step has zero
/// probability.
double sequence_log_likelihood(const LanguageModel& model, const Context& context,
                               const TokenSequence& x);

struct EnumeratedSequence {
  TokenSequence sequence;
  double log_likelihood;
};

/// All V^n sequences of the given length in lexicographic token order, with
/// joint log-likelihoods. Zero-probability sequences appear with -inf.
/// Refuses (with a size report) if V^n exceeds the limit.
std::vector<EnumeratedSequence> enumerate_sequences(
    const LanguageModel& model, const Context& context, std::size_t length,
    std::size_t limit = kDefaultEnumerationLimit);

}  // namespace declab
