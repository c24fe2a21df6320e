#include "declab/frontier.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

#include "declab/csv.hpp"
#include "declab/errors.hpp"

namespace declab::frontier {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct MeanSe {
  double mean = kNaN;
  double se = 0.0;
};

// Mean and standard error of the mean; se is 0 for n < 2. A -inf value makes
// the mean -inf and the se meaningless (NaN).
MeanSe mean_se(std::span<const double> values) {
  if (values.empty()) return {kNaN, kNaN};
  double sum = 0.0;
  for (double v : values) {
    if (v == kNegInf) return {kNegInf, kNaN};
    sum += v;
  }
  const double n = static_cast<double>(values.size());
  const double mean = sum / n;
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

double tempered_entropy(std::span<const double> log_p, double tau) {
  double max_l = kNegInf;
  for (double lp : log_p) max_l = std::max(max_l, lp / tau);
  double z = 0.0;
  for (double lp : log_p) z += std::exp(lp / tau - max_l);
  const double log_z = max_l + std::log(z);
  double h = 0.0;
  for (double lp : log_p) {
    const double log_q = lp / tau - log_z;
    const double q = std::exp(log_q);
    if (q > 0.0) h -= q * log_q;
  }
  return std::max(h, 0.0);
}

// Runs fn(0..count-1) on up to `threads` workers. Each index is independent;
// the caller's output slots make the result order-deterministic.
void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& fn) {
  if (count == 0) return;
  unsigned workers = threads == 0 ? std::thread::hardware_concurrency() : threads;
  if (workers == 0) workers = 1;
  workers = static_cast<unsigned>(
      std::min<std::size_t>(workers, count));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (true) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

double LogLikelihoodProxy::score(const TokenSequence&,
                                 double model_log_likelihood) const {
  return model_log_likelihood < cutoff_ ? model_log_likelihood : kNegInf;
}

double entropy_exact(std::span<const double> probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

double entropy_exact(const DistributionTable& table) {
  double h = 0.0;
  for (const auto& [seq, p] : table.entries()) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::max(h, 0.0);
}

MonteCarloEstimate entropy_monte_carlo(
    const std::function<double(rng::Engine&)>& draw_log_density,
    std::size_t samples, rng::Engine& engine) {
  if (samples < 1) throw InputError("entropy estimation needs >= 1 sample");
  std::vector<double> logs;
  logs.reserve(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    const double log_q = draw_log_density(engine);
    if (!std::isfinite(log_q)) {
      throw InternalError(
          "sampler reported non-finite log density for its own sample");
    }
    logs.push_back(log_q);
  }
  const auto [mean, se] = mean_se(logs);
  return MonteCarloEstimate{-mean, se, samples};
}

double goal_score(double quality, double entropy, GoalWeights weights) {
  if (!(weights.lambda >= 0.0)) {
    throw InputError("goal weight lambda must be >= 0");
  }
  if (quality == kNegInf) return kNegInf;
  if (weights.lambda == 0.0) return quality;
  return quality + weights.lambda * entropy;
}

TemperatureSolution solve_temperature_for_entropy(std::span<const double> p,
                                                  double target_entropy,
                                                  double tau_min,
                                                  double tolerance) {
  if (p.size() < 2) throw InputError("distribution needs at least 2 outcomes");
  if (!(tau_min > 0.0 && tau_min < 1.0)) {
    throw InputError("tau_min must lie in (0,1)");
  }
  double sum = 0.0;
  for (double x : p) {
    if (!(x > 0.0)) throw InputError("distribution must have full support");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw InputError("distribution sums to " + std::to_string(sum) + ", not 1");
  }
  std::vector<double> log_p;
  log_p.reserve(p.size());
  for (double x : p) log_p.push_back(std::log(x / sum));

  const double h_full = entropy_exact(p);
  const double h_min = tempered_entropy(log_p, tau_min);
  if (target_entropy < h_min - tolerance || target_entropy > h_full + tolerance) {
    throw InputError("target entropy " + std::to_string(target_entropy) +
                     " outside the achievable range [" + std::to_string(h_min) +
                     ", " + std::to_string(h_full) + "]");
  }

  bool uniform = true;
  for (double x : p) {
    if (std::abs(x / sum - p[0] / sum) > 1e-12) {
      uniform = false;
      break;
    }
  }
  if (uniform) return {1.0, true};

  if (std::abs(target_entropy - h_full) <= tolerance) return {1.0, false};
  if (std::abs(target_entropy - h_min) <= tolerance) return {tau_min, false};

  double lo = tau_min;
  double hi = 1.0;
  double mid = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    mid = 0.5 * (lo + hi);
    const double h = tempered_entropy(log_p, mid);
    if (std::abs(h - target_entropy) <= tolerance) return {mid, false};
    if (h < target_entropy) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return {mid, false};
}

std::vector<std::vector<std::size_t>> stratified_likelihood_bins(
    std::span<const double> log_likelihoods, std::size_t bin_count,
    BinMode mode) {
  if (log_likelihoods.empty()) {
    throw InputError("cannot bin an empty sample list");
  }
  if (bin_count < 1) throw InputError("bin_count must be >= 1");

  std::vector<std::vector<std::size_t>> bins(bin_count);
  if (mode == BinMode::kWidth) {
    const auto [min_it, max_it] =
        std::minmax_element(log_likelihoods.begin(), log_likelihoods.end());
    const double lo = *min_it;
    const double width = (*max_it - lo) / static_cast<double>(bin_count);
    for (std::size_t i = 0; i < log_likelihoods.size(); ++i) {
      std::size_t idx = 0;
      if (width > 0.0) {
        idx = static_cast<std::size_t>((log_likelihoods[i] - lo) / width);
        idx = std::min(idx, bin_count - 1);  // right edge lands in the last bin
      }
      bins[idx].push_back(i);
    }
  } else {
    std::vector<std::size_t> order(log_likelihoods.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return log_likelihoods[a] < log_likelihoods[b];
    });
    const std::size_t base = order.size() / bin_count;
    const std::size_t extra = order.size() % bin_count;
    std::size_t pos = 0;
    for (std::size_t b = 0; b < bin_count; ++b) {
      const std::size_t count = base + (b < extra ? 1 : 0);
      for (std::size_t i = 0; i < count; ++i) bins[b].push_back(order[pos++]);
    }
  }
  return bins;
}

SamplerConfig parse_sampler_config(std::string_view text) {
  if (text.rfind("selective", 0) == 0) {
    return selective::parse_selective_config(text);
  }
  return decoders::parse_decoder_config(text);
}

std::string format_sampler_config(const SamplerConfig& config) {
  if (const auto* dec = std::get_if<decoders::DecoderConfig>(&config)) {
    return decoders::format_decoder_config(*dec);
  }
  return selective::format_selective_config(
      std::get<selective::SelectiveConfig>(config));
}

namespace {

struct UnitResult {
  std::vector<double> log_densities;  // own-density of each accepted sample
  std::vector<double> qualities;
  std::size_t attempts = 0;
  std::size_t accepted = 0;
};

FrontierPoint make_point(const std::string& label, std::string prompt_id,
                         std::span<const double> log_densities,
                         std::span<const double> qualities, std::size_t attempts,
                         std::size_t accepted) {
  FrontierPoint point;
  point.config = label;
  point.prompt_id = std::move(prompt_id);
  point.n_samples = accepted;
  point.accept_rate =
      attempts == 0 ? 0.0
                    : static_cast<double>(accepted) / static_cast<double>(attempts);
  if (accepted == 0) {
    point.flagged = true;
    point.entropy = kNaN;
    point.entropy_se = kNaN;
    point.quality = kNaN;
    point.quality_se = kNaN;
    return point;
  }
  const auto h = mean_se(log_densities);
  point.entropy = -h.mean;
  point.entropy_se = h.se;
  const auto q = mean_se(qualities);
  point.quality = q.mean;
  point.quality_se = q.se;
  return point;
}

}  // namespace

SweepResult sweep(const LanguageModel& model, std::span<const Context> prompts,
                  std::span<const SamplerConfig> configs,
                  const ProxyQuality& proxy, std::size_t samples_per_prompt,
                  std::size_t length, std::uint64_t master_seed,
                  const SweepOptions& options) {
  if (prompts.empty()) throw InputError("sweep needs at least one prompt");
  if (configs.empty()) throw InputError("sweep needs at least one config");
  if (samples_per_prompt < 1) throw InputError("samples_per_prompt must be >= 1");

  std::vector<std::string> labels;
  labels.reserve(configs.size());
  for (const auto& c : configs) labels.push_back(format_sampler_config(c));

  const std::size_t unit_count = configs.size() * prompts.size();
  std::vector<UnitResult> units(unit_count);

  parallel_for(unit_count, options.threads, [&](std::size_t unit) {
    const std::size_t ci = unit / prompts.size();
    const std::size_t pi = unit % prompts.size();
    const Context& prompt = prompts[pi];
    const std::string& label = labels[ci];
    UnitResult& result = units[unit];
    result.log_densities.reserve(samples_per_prompt);
    result.qualities.reserve(samples_per_prompt);

    if (const auto* dec = std::get_if<decoders::DecoderConfig>(&configs[ci])) {
      for (std::size_t s = 0; s < samples_per_prompt; ++s) {
        auto engine = rng::SeedDeriver(master_seed)
                          .mix(static_cast<std::uint64_t>(pi))
                          .mix(label)
                          .mix(static_cast<std::uint64_t>(s))
                          .engine();
        const auto sample =
            decoders::sample_sequence(model, prompt, *dec, length, engine);
        result.log_densities.push_back(sample.decoder_log_prob);
        result.qualities.push_back(
            proxy.score(sample.sequence, sample.model_log_likelihood));
      }
      result.attempts = samples_per_prompt;
      result.accepted = samples_per_prompt;
    } else {
      const auto& sel = std::get<selective::SelectiveConfig>(configs[ci]);
      auto z_engine = rng::SeedDeriver(master_seed)
                          .mix("partition")
                          .mix(static_cast<std::uint64_t>(pi))
                          .mix(label)
                          .engine();
      const auto z = selective::estimate_partition(
          model, prompt, sel, length, options.partition_samples, z_engine);
      const std::optional<double> log_z =
          z.value > 0.0 ? std::optional<double>(std::log(z.value)) : std::nullopt;
      for (std::size_t s = 0; s < samples_per_prompt; ++s) {
        auto engine = rng::SeedDeriver(master_seed)
                          .mix(static_cast<std::uint64_t>(pi))
                          .mix(label)
                          .mix(static_cast<std::uint64_t>(s))
                          .engine();
        const auto outcome =
            selective::sample(model, prompt, sel, length, engine, log_z);
        result.attempts += outcome.attempts;
        if (outcome.sample) {
          ++result.accepted;
          result.log_densities.push_back(outcome.sample->decoder_log_prob);
          result.qualities.push_back(proxy.score(
              outcome.sample->sequence, outcome.sample->model_log_likelihood));
        }
      }
    }
  });

  SweepResult out;
  out.per_prompt.reserve(unit_count);
  out.summary.reserve(configs.size());
  for (std::size_t ci = 0; ci < configs.size(); ++ci) {
    std::vector<double> pooled_logq;
    std::vector<double> pooled_quality;
    std::size_t attempts = 0;
    std::size_t accepted = 0;
    for (std::size_t pi = 0; pi < prompts.size(); ++pi) {
      const UnitResult& unit = units[ci * prompts.size() + pi];
      out.per_prompt.push_back(make_point(labels[ci], std::to_string(pi),
                                          unit.log_densities, unit.qualities,
                                          unit.attempts, unit.accepted));
      pooled_logq.insert(pooled_logq.end(), unit.log_densities.begin(),
                         unit.log_densities.end());
      pooled_quality.insert(pooled_quality.end(), unit.qualities.begin(),
                            unit.qualities.end());
      attempts += unit.attempts;
      accepted += unit.accepted;
    }
    out.summary.push_back(make_point(labels[ci], "ALL", pooled_logq,
                                     pooled_quality, attempts, accepted));
  }
  return out;
}

void write_frontier_csv(std::ostream& out, const SweepResult& result) {
  csv::write_row(out, {"config", "prompt_id", "entropy", "entropy_se", "quality",
                       "quality_se", "n_samples", "accept_rate"});
  const std::size_t configs = result.summary.size();
  const std::size_t prompts =
      configs == 0 ? 0 : result.per_prompt.size() / configs;
  auto emit = [&](const FrontierPoint& p) {
    csv::write_row(out, {p.config, p.prompt_id, csv::format_double(p.entropy),
                         csv::format_double(p.entropy_se),
                         csv::format_double(p.quality),
                         csv::format_double(p.quality_se),
                         std::to_string(p.n_samples),
                         csv::format_double(p.accept_rate)});
  };
  for (std::size_t ci = 0; ci < configs; ++ci) {
    for (std::size_t pi = 0; pi < prompts; ++pi) {
      emit(result.per_prompt[ci * prompts + pi]);
    }
    emit(result.summary[ci]);
  }
}

}  // namespace declab::frontier
