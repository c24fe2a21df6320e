#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "declab/decoders.hpp"
#include "declab/distribution_table.hpp"
#include "declab/language_model.hpp"
#include "declab/likelihood.hpp"
#include "declab/rng.hpp"

namespace declab::selective {

/// Rejection sampling from the globally-normalized temperature distribution
/// p(x) proportional to p_md(x)^(1/tau) over sequences with log p_md(x) <= alpha.
struct SelectiveConfig {
  double tau = 0.5;  // (0,1); tau == 1 is admitted as "random with cutoff"
  double alpha = 0.0;  // log-likelihood cutoff in nats; 0 disables it
  std::size_t max_attempts = 10'000;
};

/// Parses "selective:tau=0.5,alpha=-58.09,max=10000". tau is required; alpha
/// defaults to 0 and max to 10000.
SelectiveConfig parse_selective_config(std::string_view text);
std::string format_selective_config(const SelectiveConfig& config);
void validate(const SelectiveConfig& config);

/// log M with M chosen tight at the cutoff: log M = alpha * (1/tau - 1).
double log_envelope_constant(const SelectiveConfig& config);

struct SelectiveOutcome {
  /// Present iff a proposal was accepted within max_attempts. Its
  /// decoder_log_prob is energy - log_partition when a partition estimate was
  /// supplied, NaN otherwise.
  std::optional<decoders::DecodedSample> sample;
  /// Unnormalized log density (1/tau) * log p_md(x) of the accepted sample;
  /// NaN when no sample was accepted.
  double energy = 0.0;
  std::size_t attempts = 0;
  std::size_t rejected_by_cutoff = 0;
  std::size_t rejected_by_coin = 0;
};

/// One accept/reject loop: proposals are random samples from the model; a
/// proposal with log p_md(x) > alpha is rejected outright, otherwise it is
/// accepted with probability exp((1/tau - 1)(log p_md(x) - alpha)), which lies
/// in (0,1]. Exhausting max_attempts is reported, not thrown.
SelectiveOutcome sample(const LanguageModel& model, const Context& context,
                        const SelectiveConfig& config, std::size_t length,
                        rng::Engine& engine,
                        std::optional<double> log_partition = std::nullopt);

struct GlobalDistribution {
  DistributionTable table;  // admissible sequences, normalized
  double log_partition;     // log sum_{admissible} p_md(x)^(1/tau)
  double partition;         // exp(log_partition)
};

/// Exact globally-normalized temperature distribution by enumeration:
/// p(x) = p_md(x)^(1/tau) / Z over sequences with log p_md(x) <= alpha, 0 for
/// the rest. Empty admissible support is an error.
GlobalDistribution global_temperature_exact(
    const LanguageModel& model, const Context& context, double tau, double alpha,
    std::size_t length, std::size_t limit = kDefaultEnumerationLimit);

struct PartitionEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  std::size_t samples = 0;
};

/// Unbiased Monte Carlo estimate of the partition function via the importance
/// identity Z = E_{x~p_md}[ p_md(x)^(1/tau - 1) * 1{log p_md(x) <= alpha} ].
PartitionEstimate estimate_partition(const LanguageModel& model,
                                     const Context& context,
                                     const SelectiveConfig& config,
                                     std::size_t length, std::size_t samples,
                                     rng::Engine& engine);

/// Nearest-rank empirical percentile of the supplied log-likelihoods;
/// percentile is in (0,100).
double choose_alpha_percentile(std::span<const double> log_likelihoods,
                               double percentile);

}  // namespace declab::selective
