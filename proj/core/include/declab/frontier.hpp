#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "declab/decoders.hpp"
#include "declab/distribution_table.hpp"
#include "declab/language_model.hpp"
#include "declab/rng.hpp"
#include "declab/selective.hpp"

namespace declab::frontier {

/// Inflection point of the log-likelihood vs. human-quality curve measured in
/// the original large-scale crowdworker study (on a 774M-parameter model over
/// news prompts). That data is not redistributable, so this is a reference
/// constant and a documented default, not a value this library can reproduce.
inline constexpr double kRecordedInflectionLogLikelihood = -58.09;

/// Stand-in for an expected human quality judgment. Deterministic.
class ProxyQuality {
public:
  virtual ~ProxyQuality() = default;
  virtual double score(const TokenSequence& sequence,
                       double model_log_likelihood) const = 0;
};

/// score = log p if log p < cutoff, else -inf.
class LogLikelihoodProxy final : public ProxyQuality {
public:
  explicit LogLikelihoodProxy(double cutoff = kRecordedInflectionLogLikelihood)
      : cutoff_(cutoff) {}
  double score(const TokenSequence&, double model_log_likelihood) const override;
  double cutoff() const { return cutoff_; }

private:
  double cutoff_;
};

/// Shannon entropy -sum q log q in nats, with 0 log 0 = 0.
double entropy_exact(std::span<const double> probs);
double entropy_exact(const DistributionTable& table);

struct MonteCarloEstimate {
  double value = 0.0;
  double standard_error = 0.0;
  std::size_t samples = 0;
};

/// Entropy estimate -mean(log q(x_i)) from a sampler that can evaluate the
/// log density of its own draws. A -inf or NaN own-density is an internal
/// consistency error.
MonteCarloEstimate entropy_monte_carlo(
    const std::function<double(rng::Engine&)>& draw_log_density,
    std::size_t samples, rng::Engine& engine);

struct GoalWeights {
  double lambda = 0.0;  // >= 0
};

/// G = quality + lambda * entropy; -inf quality propagates.
double goal_score(double quality, double entropy, GoalWeights weights);

struct TemperatureSolution {
  double tau = 1.0;
  /// Set when the entropy of p^(1/tau) does not vary with tau (uniform p).
  bool degenerate = false;
};

/// Finds tau in [tau_min, 1] such that the entropy of p^(1/tau)/Z equals the
/// target within `tolerance`, by bisection on the monotone map tau -> H.
/// Targets outside [H(tau_min), H(p)] are input errors naming the range.
TemperatureSolution solve_temperature_for_entropy(std::span<const double> p,
                                                  double target_entropy,
                                                  double tau_min = 1e-3,
                                                  double tolerance = 1e-9);

enum class BinMode {
  kWidth,  // equal-width bins over [min, max], right edge inclusive in last
  kCount,  // equal-count groups of the likelihood-sorted samples
};

/// Groups sample indices by log-likelihood. Result has exactly bin_count
/// groups (possibly empty in width mode); each index appears exactly once.
std::vector<std::vector<std::size_t>> stratified_likelihood_bins(
    std::span<const double> log_likelihoods, std::size_t bin_count,
    BinMode mode = BinMode::kWidth);

/// One dot on an entropy/quality curve.
struct FrontierPoint {
  std::string config;
  std::string prompt_id;  // prompt index, or "ALL" for the pooled row
  double entropy = 0.0;
  double entropy_se = 0.0;
  double quality = 0.0;
  double quality_se = 0.0;
  std::size_t n_samples = 0;
  double accept_rate = 1.0;
  /// Set when a selective config accepted no samples; such points carry no
  /// estimates but are not dropped.
  bool flagged = false;
};

using SamplerConfig = std::variant<decoders::DecoderConfig, selective::SelectiveConfig>;

/// Parses either a decoder config string or "selective:...".
SamplerConfig parse_sampler_config(std::string_view text);
std::string format_sampler_config(const SamplerConfig& config);

struct SweepOptions {
  /// Monte Carlo sample count for each selective config's partition estimate.
  std::size_t partition_samples = 20'000;
  /// Worker threads; 0 means hardware concurrency. Results are identical
  /// regardless of the thread count.
  unsigned threads = 0;
};

struct SweepResult {
  std::vector<FrontierPoint> summary;     // one per config, prompt_id=ALL
  std::vector<FrontierPoint> per_prompt;  // one per (config, prompt)
};

/// Samples every (config, prompt) cell, scores samples with the proxy, and
/// aggregates entropy/quality estimates. Sample streams are derived from
/// (master_seed, prompt index, config label, sample index), so results do not
/// depend on scheduling.
SweepResult sweep(const LanguageModel& model, std::span<const Context> prompts,
                  std::span<const SamplerConfig> configs,
                  const ProxyQuality& proxy, std::size_t samples_per_prompt,
                  std::size_t length, std::uint64_t master_seed,
                  const SweepOptions& options = {});

/// Columns: config,prompt_id,entropy,entropy_se,quality,quality_se,n_samples,
/// accept_rate. Per-prompt rows first, then the ALL row, per config.
void write_frontier_csv(std::ostream& out, const SweepResult& result);

}  // namespace declab::frontier
