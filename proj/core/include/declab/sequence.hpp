#pragma once

#include <compare>
#include <cstdint>
#include <initializer_list>
#include <utility>
#include <vector>

namespace declab {

/// Dense token index into a Vocabulary, 0..V-1.
using TokenId = std::int32_t;

/// A finite list of token indices.
struct TokenSequence {
  std::vector<TokenId> ids;

  TokenSequence() = default;
  TokenSequence(std::vector<TokenId> v) : ids(std::move(v)) {}
  TokenSequence(std::initializer_list<TokenId> v) : ids(v) {}

  std::size_t size() const { return ids.size(); }
  bool empty() const { return ids.empty(); }
  void push_back(TokenId id) { ids.push_back(id); }

  friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
  friend auto operator<=>(const TokenSequence& a, const TokenSequence& b) {
    return a.ids <=> b.ids;
  }
};

/// Conditioning signal: a fixed prompt prefix. The prompt sits outside the
/// generated tokens and outside their likelihood.
struct Context {
  TokenSequence prompt;

  Context() = default;
  Context(TokenSequence p) : prompt(std::move(p)) {}

  friend bool operator==(const Context&, const Context&) = default;
};

/// prompt ++ partial: the full history a model conditions on.
inline TokenSequence concat(const TokenSequence& a, const TokenSequence& b) {
  TokenSequence out = a;
  out.ids.insert(out.ids.end(), b.ids.begin(), b.ids.end());
  return out;
}

}  // namespace declab
