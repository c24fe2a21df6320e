#include "declab/selective.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <vector>

#include "declab/errors.hpp"

namespace declab::selective {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double parse_number(std::string_view text, std::string_view what) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw InputError("cannot parse " + std::string(what) + " from \"" +
                     std::string(text) + "\"");
  }
  return value;
}

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", value);
  return buf;
}

double log_sum_exp(std::span<const double> logs) {
  double max_log = kNegInf;
  for (double x : logs) max_log = std::max(max_log, x);
  if (max_log == kNegInf) return kNegInf;
  double sum = 0.0;
  for (double x : logs) {
    if (x != kNegInf) sum += std::exp(x - max_log);
  }
  return max_log + std::log(sum);
}

}  // namespace

SelectiveConfig parse_selective_config(std::string_view text) {
  constexpr std::string_view prefix = "selective:";
  if (text.substr(0, prefix.size()) != prefix) {
    throw InputError("selective config must start with \"selective:\"");
  }
  std::string_view rest = text.substr(prefix.size());
  SelectiveConfig config;
  bool saw_tau = false;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    rest = comma == std::string_view::npos ? std::string_view{}
                                           : rest.substr(comma + 1);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw InputError("expected key=value in selective config, got \"" +
                       std::string(item) + "\"");
    }
    const std::string_view key = item.substr(0, eq);
    const std::string_view value = item.substr(eq + 1);
    if (key == "tau") {
      config.tau = parse_number(value, "tau");
      saw_tau = true;
    } else if (key == "alpha") {
      config.alpha = parse_number(value, "alpha");
    } else if (key == "max") {
      const double m = parse_number(value, "max");
      if (!(m >= 1.0) || m != std::floor(m)) {
        throw InputError("max must be a positive integer");
      }
      config.max_attempts = static_cast<std::size_t>(m);
    } else {
      throw InputError("unknown selective config key \"" + std::string(key) +
                       "\"");
    }
  }
  if (!saw_tau) throw InputError("selective config requires tau");
  validate(config);
  return config;
}

std::string format_selective_config(const SelectiveConfig& config) {
  return "selective:tau=" + format_number(config.tau) +
         ",alpha=" + format_number(config.alpha) +
         ",max=" + std::to_string(config.max_attempts);
}

void validate(const SelectiveConfig& config) {
  // tau == 1 degenerates to random sampling with a cutoff; admitted.
  if (!(config.tau > 0.0 && config.tau <= 1.0)) {
    throw InputError("selective tau must lie in (0,1], got " +
                     format_number(config.tau));
  }
  if (!std::isfinite(config.alpha)) {
    throw InputError("selective alpha must be finite");
  }
  if (config.max_attempts < 1) {
    throw InputError("selective max_attempts must be >= 1");
  }
}

double log_envelope_constant(const SelectiveConfig& config) {
  return config.alpha * (1.0 / config.tau - 1.0);
}

SelectiveOutcome sample(const LanguageModel& model, const Context& context,
                        const SelectiveConfig& config, std::size_t length,
                        rng::Engine& engine,
                        std::optional<double> log_partition) {
  validate(config);
  const double exponent = 1.0 / config.tau - 1.0;

  SelectiveOutcome outcome;
  outcome.energy = kNaN;
  while (outcome.attempts < config.max_attempts) {
    ++outcome.attempts;
    decoders::DecodedSample proposal = decoders::sample_sequence(
        model, context, decoders::Random{}, length, engine);
    const double logp = proposal.model_log_likelihood;
    if (logp > config.alpha) {
      ++outcome.rejected_by_cutoff;
      continue;
    }
    // log acceptance probability; <= 0 because logp <= alpha and exponent >= 0.
    const double log_accept = exponent * (logp - config.alpha);
    const double u = rng::uniform_unit_positive(engine);
    if (std::log(u) > log_accept) {
      ++outcome.rejected_by_coin;
      continue;
    }
    outcome.energy = logp / config.tau;
    proposal.decoder_log_prob =
        log_partition ? outcome.energy - *log_partition : kNaN;
    outcome.sample = std::move(proposal);
    break;
  }
  return outcome;
}

GlobalDistribution global_temperature_exact(const LanguageModel& model,
                                            const Context& context, double tau,
                                            double alpha, std::size_t length,
                                            std::size_t limit) {
  if (!(tau > 0.0 && tau <= 1.0)) {
    throw InputError("tau must lie in (0,1], got " + format_number(tau));
  }
  const auto enumerated = enumerate_sequences(model, context, length, limit);

  std::vector<double> log_weights;
  log_weights.reserve(enumerated.size());
  for (const auto& entry : enumerated) {
    const bool admissible =
        entry.log_likelihood != kNegInf && entry.log_likelihood <= alpha;
    log_weights.push_back(admissible ? entry.log_likelihood / tau : kNegInf);
  }
  const double log_z = log_sum_exp(log_weights);
  if (log_z == kNegInf) {
    throw EmptySupportError(
        "cutoff alpha=" + format_number(alpha) +
        " excludes every sequence; the admissible support is empty");
  }

  std::vector<DistributionTable::Entry> entries;
  entries.reserve(enumerated.size());
  for (std::size_t i = 0; i < enumerated.size(); ++i) {
    const double p = log_weights[i] == kNegInf
                         ? 0.0
                         : std::exp(log_weights[i] - log_z);
    entries.emplace_back(enumerated[i].sequence, p);
  }
  return GlobalDistribution{DistributionTable(std::move(entries)), log_z,
                            std::exp(log_z)};
}

PartitionEstimate estimate_partition(const LanguageModel& model,
                                     const Context& context,
                                     const SelectiveConfig& config,
                                     std::size_t length, std::size_t samples,
                                     rng::Engine& engine) {
  validate(config);
  if (samples < 1) throw InputError("partition estimation needs >= 1 sample");
  const double exponent = 1.0 / config.tau - 1.0;

  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const auto proposal = decoders::sample_sequence(
        model, context, decoders::Random{}, length, engine);
    const double logp = proposal.model_log_likelihood;
    const double w = logp <= config.alpha ? std::exp(exponent * logp) : 0.0;
    sum += w;
    sum_sq += w * w;
  }
  const double n = static_cast<double>(samples);
  const double mean = sum / n;
  double se = 0.0;
  if (samples > 1) {
    const double var = std::max(0.0, (sum_sq - n * mean * mean) / (n - 1.0));
    se = std::sqrt(var / n);
  }
  return PartitionEstimate{mean, se, samples};
}

double choose_alpha_percentile(std::span<const double> log_likelihoods,
                               double percentile) {
  if (log_likelihoods.empty()) {
    throw InputError("cannot take a percentile of an empty list");
  }
  if (!(percentile > 0.0 && percentile < 100.0)) {
    throw InputError("percentile must lie in (0,100), got " +
                     format_number(percentile));
  }
  std::vector<double> sorted(log_likelihoods.begin(), log_likelihoods.end());
  std::sort(sorted.begin(), sorted.end());
  // Nearest rank: the ceil(q/100 * N)-th smallest value.
  const double n = static_cast<double>(sorted.size());
  auto rank = static_cast<std::size_t>(std::ceil(percentile / 100.0 * n));
  rank = std::clamp<std::size_t>(rank, 1, sorted.size());
  return sorted[rank - 1];
}

}  // namespace declab::selective
