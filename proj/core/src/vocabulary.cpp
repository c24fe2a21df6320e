#include "declab/vocabulary.hpp"

#include <sstream>

#include "declab/errors.hpp"

namespace declab {

Vocabulary::Vocabulary(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.empty()) {
    throw InputError("vocabulary must contain at least one token");
  }
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) {
      throw InputError("vocabulary token " + std::to_string(i) + " is empty");
    }
    auto [it, inserted] = index_.emplace(tokens_[i], static_cast<TokenId>(i));
    if (!inserted) {
      throw InputError("duplicate vocabulary token \"" + tokens_[i] + "\"");
    }
  }
}

const std::string& Vocabulary::token(TokenId id) const {
  if (!contains(id)) {
    throw InputError("token id " + std::to_string(id) + " out of range [0, " +
                     std::to_string(tokens_.size()) + ")");
  }
  return tokens_[static_cast<std::size_t>(id)];
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocabulary::require(std::string_view token) const {
  if (auto id = find(token)) return *id;
  throw InputError("unknown token \"" + std::string(token) + "\"");
}

TokenSequence Vocabulary::encode(const std::vector<std::string>& tokens) const {
  TokenSequence seq;
  seq.ids.reserve(tokens.size());
  for (const auto& t : tokens) seq.push_back(require(t));
  return seq;
}

std::string Vocabulary::render(const TokenSequence& seq, char sep) const {
  std::ostringstream out;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    if (i > 0) out << sep;
    out << token(seq.ids[i]);
  }
  return out.str();
}

}  // namespace declab
