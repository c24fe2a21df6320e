#include "declab/likelihood.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "declab/errors.hpp"

namespace declab {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Checked V^n with early refusal.
std::size_t sequence_count(std::size_t v, std::size_t n, std::size_t limit) {
  std::size_t total = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (total > limit / v) {
      throw InputError("enumeration of " + std::to_string(v) + "^" +
                       std::to_string(n) + " sequences exceeds the limit of " +
                       std::to_string(limit));
    }
    total *= v;
  }
  if (total > limit) {
    throw InputError("enumeration of " + std::to_string(v) + "^" +
                     std::to_string(n) + " = " + std::to_string(total) +
                     " sequences exceeds the limit of " + std::to_string(limit));
  }
  return total;
}

void enumerate_rec(const LanguageModel& model, const Context& context,
                   std::size_t length, TokenSequence& partial, double logp,
                   std::vector<EnumeratedSequence>& out) {
  if (partial.size() == length) {
    out.push_back({partial, logp});
    return;
  }
  const std::size_t v = model.vocabulary().size();
  if (logp == kNegInf) {
    // Whole subtree has zero mass; emit it without querying the model, which
    // may not store distributions for unreachable prefixes.
    std::size_t remaining = 1;
    for (std::size_t i = partial.size(); i < length; ++i) remaining *= v;
    TokenSequence seq = partial;
    seq.ids.resize(length, 0);
    for (std::size_t s = 0; s < remaining; ++s) {
      out.push_back({seq, kNegInf});
      // Odometer increment over the suffix positions.
      for (std::size_t pos = length; pos-- > partial.size();) {
        if (++seq.ids[pos] < static_cast<TokenId>(v)) break;
        seq.ids[pos] = 0;
      }
    }
    return;
  }
  const ConditionalDistribution dist = model.next(context, partial);
  for (std::size_t t = 0; t < v; ++t) {
    const double p = dist[t];
    partial.push_back(static_cast<TokenId>(t));
    enumerate_rec(model, context, length, partial,
                  p > 0.0 ? logp + std::log(p) : kNegInf, out);
    partial.ids.pop_back();
  }
}

}  // namespace

double sequence_log_likelihood(const LanguageModel& model, const Context& context,
                               const TokenSequence& x) {
  const auto& vocab = model.vocabulary();
  for (TokenId id : x.ids) {
    if (!vocab.contains(id)) {
      throw InputError("token id " + std::to_string(id) + " out of range [0, " +
                       std::to_string(vocab.size()) + ")");
    }
  }
  double logp = 0.0;
  TokenSequence partial;
  partial.ids.reserve(x.size());
  for (TokenId id : x.ids) {
    const ConditionalDistribution dist = model.next(context, partial);
    const double p = dist[static_cast<std::size_t>(id)];
    if (p <= 0.0) return kNegInf;
    logp += std::log(p);
    partial.push_back(id);
  }
  return logp;
}

std::vector<EnumeratedSequence> enumerate_sequences(const LanguageModel& model,
                                                    const Context& context,
                                                    std::size_t length,
                                                    std::size_t limit) {
  const std::size_t v = model.vocabulary().size();
  const std::size_t total = sequence_count(v, length, limit);
  if (context.prompt.size() + length > model.max_enumeration_depth()) {
    throw InputError("length " + std::to_string(length) +
                     " exceeds the model's maximum enumeration depth");
  }
  std::vector<EnumeratedSequence> out;
  out.reserve(total);
  TokenSequence partial;
  enumerate_rec(model, context, length, partial, 0.0, out);
  return out;
}

}  // namespace declab
