#include "declab/decoders.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "declab/errors.hpp"

namespace declab::decoders {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double parse_number(std::string_view text, std::string_view what) {
  double value = 0.0;
  const auto* begin = text.data();
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
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

// Indices sorted by probability descending, ties by ascending token index.
std::vector<std::size_t> sorted_by_mass(std::span<const double> probs) {
  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
  return order;
}

ConditionalDistribution renormalized(std::vector<double> probs) {
  double sum = 0.0;
  for (double p : probs) sum += p;
  if (!(sum > 0.0)) {
    throw InternalError("warp produced an all-zero distribution");
  }
  for (double& p : probs) p /= sum;
  return ConditionalDistribution(std::move(probs));
}

ConditionalDistribution warp_temperature(const ConditionalDistribution& dist,
                                         double t) {
  if (t == 1.0) return dist;
  // Log-space softmax: p^(1/t) / sum p^(1/t), stable for t down to 1e-3.
  const auto probs = dist.probs();
  std::vector<double> logits(probs.size(), kNegInf);
  double max_logit = kNegInf;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] > 0.0) {
      logits[i] = std::log(probs[i]) / t;
      max_logit = std::max(max_logit, logits[i]);
    }
  }
  std::vector<double> out(probs.size(), 0.0);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (logits[i] != kNegInf) out[i] = std::exp(logits[i] - max_logit);
  }
  return renormalized(std::move(out));
}

ConditionalDistribution warp_top_k(const ConditionalDistribution& dist,
                                   std::size_t k) {
  if (k > dist.size()) {
    throw InputError("topk k=" + std::to_string(k) +
                     " exceeds vocabulary size " + std::to_string(dist.size()));
  }
  if (k == dist.size()) return dist;
  const auto order = sorted_by_mass(dist.probs());
  std::vector<double> out(dist.size(), 0.0);
  for (std::size_t r = 0; r < k; ++r) out[order[r]] = dist[order[r]];
  return renormalized(std::move(out));
}

ConditionalDistribution warp_top_p(const ConditionalDistribution& dist, double p) {
  if (p >= 1.0) return dist;
  const auto order = sorted_by_mass(dist.probs());
  std::vector<double> out(dist.size(), 0.0);
  double cum = 0.0;
  for (std::size_t r = 0; r < order.size(); ++r) {
    out[order[r]] = dist[order[r]];
    cum += dist[order[r]];
    if (cum >= p) break;
  }
  return renormalized(std::move(out));
}

ConditionalDistribution warp_greedy(const ConditionalDistribution& dist) {
  std::vector<double> out(dist.size(), 0.0);
  out[dist.argmax()] = 1.0;
  return ConditionalDistribution(std::move(out));
}

}  // namespace

DecoderConfig parse_decoder_config(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view kind = text.substr(0, colon);
  const std::string_view arg =
      colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);

  if (kind == "random") {
    if (!arg.empty()) throw InputError("random takes no hyperparameter");
    return Random{};
  }
  if (kind == "greedy") {
    if (!arg.empty()) throw InputError("greedy takes no hyperparameter");
    return Greedy{};
  }
  if (kind == "temperature") {
    const double t = parse_number(arg, "temperature");
    if (!(t > 0.0 && t <= 1.0)) {
      throw InputError("temperature must lie in (0,1], got " + format_number(t));
    }
    return Temperature{t};
  }
  if (kind == "topk") {
    const double k = parse_number(arg, "topk");
    if (!(k >= 1.0) || k != std::floor(k)) {
      throw InputError("topk needs an integer k >= 1, got \"" + std::string(arg) +
                       "\"");
    }
    return TopK{static_cast<std::size_t>(k)};
  }
  if (kind == "topp") {
    const double p = parse_number(arg, "topp");
    if (!(p > 0.0 && p <= 1.0)) {
      throw InputError("topp must lie in (0,1], got " + format_number(p));
    }
    return TopP{p};
  }
  throw InputError("unknown decoder config \"" + std::string(text) + "\"");
}

std::string format_decoder_config(const DecoderConfig& config) {
  return std::visit(
      [](const auto& c) -> std::string {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, Random>) {
          return "random";
        } else if constexpr (std::is_same_v<T, Greedy>) {
          return "greedy";
        } else if constexpr (std::is_same_v<T, Temperature>) {
          return "temperature:" + format_number(c.t);
        } else if constexpr (std::is_same_v<T, TopK>) {
          return "topk:" + std::to_string(c.k);
        } else {
          return "topp:" + format_number(c.p);
        }
      },
      config);
}

void validate(const DecoderConfig& config, std::size_t vocab_size) {
  if (const auto* topk = std::get_if<TopK>(&config)) {
    if (topk->k < 1 || topk->k > vocab_size) {
      throw InputError("topk k=" + std::to_string(topk->k) +
                       " outside [1, " + std::to_string(vocab_size) + "]");
    }
  }
  if (const auto* temp = std::get_if<Temperature>(&config)) {
    if (!(temp->t > 0.0 && temp->t <= 1.0)) {
      throw InputError("temperature outside (0,1]");
    }
  }
  if (const auto* topp = std::get_if<TopP>(&config)) {
    if (!(topp->p > 0.0 && topp->p <= 1.0)) {
      throw InputError("topp outside (0,1]");
    }
  }
}

ConditionalDistribution warp(const ConditionalDistribution& dist,
                             const DecoderConfig& config) {
  return std::visit(
      [&](const auto& c) -> ConditionalDistribution {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, Random>) {
          return dist;
        } else if constexpr (std::is_same_v<T, Greedy>) {
          return warp_greedy(dist);
        } else if constexpr (std::is_same_v<T, Temperature>) {
          return warp_temperature(dist, c.t);
        } else if constexpr (std::is_same_v<T, TopK>) {
          return warp_top_k(dist, c.k);
        } else {
          return warp_top_p(dist, c.p);
        }
      },
      config);
}

DecodedSample sample_sequence(const LanguageModel& model, const Context& context,
                              const DecoderConfig& config, std::size_t length,
                              rng::Engine& engine) {
  if (length < 1) throw InputError("sample length must be >= 1");
  validate(config, model.vocabulary().size());
  if (context.prompt.size() + length > model.max_enumeration_depth()) {
    throw InputError("requested length exceeds the model's depth");
  }
  DecodedSample sample;
  sample.sequence.ids.reserve(length);
  for (std::size_t i = 0; i < length; ++i) {
    const ConditionalDistribution dist = model.next(context, sample.sequence);
    const ConditionalDistribution warped = warp(dist, config);
    const std::size_t t = rng::sample_index(warped.probs(), engine);
    sample.model_log_likelihood += std::log(dist[t]);
    sample.decoder_log_prob += std::log(warped[t]);
    sample.sequence.push_back(static_cast<TokenId>(t));
  }
  return sample;
}

double sequence_log_prob(const LanguageModel& model, const Context& context,
                         const DecoderConfig& config, const TokenSequence& x) {
  validate(config, model.vocabulary().size());
  double logq = 0.0;
  TokenSequence partial;
  partial.ids.reserve(x.size());
  for (TokenId id : x.ids) {
    if (!model.vocabulary().contains(id)) {
      throw InputError("token id " + std::to_string(id) + " out of range");
    }
    const ConditionalDistribution warped =
        warp(model.next(context, partial), config);
    const double q = warped[static_cast<std::size_t>(id)];
    if (q <= 0.0) return kNegInf;
    logq += std::log(q);
    partial.push_back(id);
  }
  return logq;
}

namespace {

void induced_rec(const LanguageModel& model, const Context& context,
                 const DecoderConfig& config, std::size_t length,
                 TokenSequence& partial, double prob,
                 std::vector<DistributionTable::Entry>& out) {
  if (partial.size() == length) {
    out.emplace_back(partial, prob);
    return;
  }
  const std::size_t v = model.vocabulary().size();
  if (prob == 0.0) {
    // Zero-mass subtree: emit without querying the model.
    std::size_t remaining = 1;
    for (std::size_t i = partial.size(); i < length; ++i) remaining *= v;
    TokenSequence seq = partial;
    seq.ids.resize(length, 0);
    for (std::size_t s = 0; s < remaining; ++s) {
      out.emplace_back(seq, 0.0);
      for (std::size_t pos = length; pos-- > partial.size();) {
        if (++seq.ids[pos] < static_cast<TokenId>(v)) break;
        seq.ids[pos] = 0;
      }
    }
    return;
  }
  const ConditionalDistribution warped =
      warp(model.next(context, partial), config);
  for (std::size_t t = 0; t < v; ++t) {
    partial.push_back(static_cast<TokenId>(t));
    induced_rec(model, context, config, length, partial, prob * warped[t], out);
    partial.ids.pop_back();
  }
}

}  // namespace

DistributionTable induced_distribution_exact(const LanguageModel& model,
                                             const Context& context,
                                             const DecoderConfig& config,
                                             std::size_t length,
                                             std::size_t limit) {
  validate(config, model.vocabulary().size());
  // Reuse the enumeration guard for the V^n size check.
  const std::size_t v = model.vocabulary().size();
  std::size_t total = 1;
  for (std::size_t i = 0; i < length; ++i) {
    if (v != 0 && total > limit / v) {
      throw InputError("induced distribution over " + std::to_string(v) + "^" +
                       std::to_string(length) + " sequences exceeds the limit of " +
                       std::to_string(limit));
    }
    total *= v;
  }
  if (context.prompt.size() + length > model.max_enumeration_depth()) {
    throw InputError("length exceeds the model's maximum enumeration depth");
  }
  std::vector<DistributionTable::Entry> entries;
  entries.reserve(total);
  TokenSequence partial;
  induced_rec(model, context, config, length, partial, 1.0, entries);
  return DistributionTable(std::move(entries));
}

}  // namespace declab::decoders
