#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "declab/sequence.hpp"

namespace declab {

/// Ordered token alphabet. Token ids are dense indices 0..V-1.
/// Immutable after construction.
class Vocabulary {
public:
  /// Tokens must be nonempty strings and pairwise distinct.
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(TokenId id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::optional<TokenId> find(std::string_view token) const;
  /// Like find(), but unknown tokens are an input error.
  TokenId require(std::string_view token) const;

  bool contains(TokenId id) const {
    return id >= 0 && static_cast<std::size_t>(id) < tokens_.size();
  }

  /// Maps token strings to a TokenSequence; unknown tokens are input errors.
  TokenSequence encode(const std::vector<std::string>& tokens) const;
  /// Renders a sequence as token strings joined by `sep`.
  std::string render(const TokenSequence& seq, char sep = ' ') const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.tokens_ == b.tokens_;
  }

private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
};

}  // namespace declab
