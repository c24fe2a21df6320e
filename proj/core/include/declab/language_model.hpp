#pragma once

#include <limits>

#include "declab/distribution.hpp"
#include "declab/sequence.hpp"
#include "declab/vocabulary.hpp"

namespace declab {

/// Generation depth for models that can condition on any history length.
inline constexpr std::size_t kUnlimitedDepth =
    std::numeric_limits<std::size_t>::max();

/// A conditional next-token distribution provider. Implementations are
/// immutable after construction and deterministic: identical arguments yield
/// bitwise-identical distributions, so concurrent reads are safe.
class LanguageModel {
public:
  virtual ~LanguageModel() = default;

  virtual const Vocabulary& vocabulary() const = 0;

  /// Longest history (prompt + generated tokens) the model can condition on.
  /// Sequence length requests beyond this are input errors.
  virtual std::size_t max_enumeration_depth() const = 0;

  /// Distribution of the next token given the prompt and the tokens generated
  /// so far.
  virtual ConditionalDistribution next(const Context& context,
                                       const TokenSequence& partial) const = 0;
};

}  // namespace declab
