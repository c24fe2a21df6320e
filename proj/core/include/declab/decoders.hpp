#pragma once

#include <string>
#include <string_view>
#include <variant>

#include "declab/distribution_table.hpp"
#include "declab/language_model.hpp"
#include "declab/likelihood.hpp"
#include "declab/rng.hpp"

namespace declab::decoders {

/// Token-by-token decoding rules. Hyperparameter ranges: t in (0,1] (greedy
/// covers the t -> 0 endpoint), k in [1,V], p in (0,1].
struct Random {};
struct Greedy {};
struct Temperature {
  double t = 1.0;
};
struct TopK {
  std::size_t k = 1;
};
struct TopP {
  double p = 1.0;
};

using DecoderConfig = std::variant<Random, Greedy, Temperature, TopK, TopP>;

/// Parses "random", "greedy", "temperature:0.7", "topk:40", "topp:0.9".
DecoderConfig parse_decoder_config(std::string_view text);
std::string format_decoder_config(const DecoderConfig& config);

/// Hyperparameter checks that need the vocabulary size (k <= V).
void validate(const DecoderConfig& config, std::size_t vocab_size);

/// Applies the decoding rule to one step's distribution:
///   Random       identity
///   Greedy       point mass on the argmax (ties to the lowest index)
///   Temperature  p^(1/t), renormalized (computed in log space)
///   TopK         k most probable tokens, renormalized
///   TopP         minimal probability-sorted prefix with cumulative mass >= p,
///                renormalized
/// Sorting ties break by ascending token index.
ConditionalDistribution warp(const ConditionalDistribution& dist,
                             const DecoderConfig& config);

struct DecodedSample {
  TokenSequence sequence;
  double model_log_likelihood = 0.0;
  /// Sum of log warped conditionals actually used. For selective sampling
  /// this is the normalized global density when a partition estimate is
  /// available, NaN ("unset") otherwise.
  double decoder_log_prob = 0.0;
};

/// Draws exactly `length` tokens, warping each conditional before sampling.
/// Reproducible given the engine state.
DecodedSample sample_sequence(const LanguageModel& model, const Context& context,
                              const DecoderConfig& config, std::size_t length,
                              rng::Engine& engine);

/// Log-probability of x under the decoder-induced distribution: sum of log
/// warped conditionals. -inf if any step zeroed the token x takes.
double sequence_log_prob(const LanguageModel& model, const Context& context,
                         const DecoderConfig& config, const TokenSequence& x);

/// Exact decoder-induced distribution over all V^n sequences: products of
/// warped conditionals along each path.
DistributionTable induced_distribution_exact(
    const LanguageModel& model, const Context& context,
    const DecoderConfig& config, std::size_t length,
    std::size_t limit = kDefaultEnumerationLimit);

}  // namespace declab::decoders
