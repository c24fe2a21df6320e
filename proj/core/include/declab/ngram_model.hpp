#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "declab/language_model.hpp"
#include "declab/tree_model.hpp"

namespace declab {

enum class Tokenization { kWhitespace, kChar };

Tokenization parse_tokenization(std::string_view name);
std::string_view tokenization_name(Tokenization mode);

/// Splits raw corpus text into token strings. Whitespace mode splits on
/// whitespace runs; char mode yields one token per character, keeping spaces
/// but dropping line breaks.
std::vector<std::string> tokenize(std::string_view text, Tokenization mode);

/// Count-based model with additive smoothing:
///   p(t | ctx) = (count(ctx,t) + k) / (count(ctx) + kV)
/// where ctx is the last min(history, order-1) tokens. Strictly positive
/// everywhere for k > 0; no backoff.
class NgramModel final : public LanguageModel {
public:
  struct CountRow {
    std::vector<std::uint64_t> counts;  // size V
    std::uint64_t total = 0;
  };
  // tables[j]: contexts of exactly j tokens, keyed by the raw id bytes.
  using Tables = std::vector<std::unordered_map<std::string, CountRow>>;

  NgramModel(Vocabulary vocabulary, std::size_t order, double smoothing,
             Tables tables, Tokenization tokenization = Tokenization::kWhitespace);

  const Vocabulary& vocabulary() const override { return vocabulary_; }
  std::size_t max_enumeration_depth() const override { return kUnlimitedDepth; }
  ConditionalDistribution next(const Context& context,
                               const TokenSequence& partial) const override;

  std::size_t order() const { return order_; }
  double smoothing() const { return smoothing_; }
  Tokenization tokenization() const { return tokenization_; }
  const Tables& tables() const { return tables_; }

  static std::string context_key(std::span<const TokenId> context);

private:
  Vocabulary vocabulary_;
  std::size_t order_;
  double smoothing_;
  Tables tables_;
  Tokenization tokenization_;
};

/// Trains on a token-id stream with the vocabulary supplied explicitly.
NgramModel train_ngram(Vocabulary vocabulary, std::span<const TokenId> corpus,
                       std::size_t order, double smoothing,
                       Tokenization tokenization = Tokenization::kWhitespace);

/// Trains on token strings; the vocabulary is the distinct corpus tokens in
/// order of first appearance.
NgramModel train_ngram(const std::vector<std::string>& corpus_tokens,
                       std::size_t order, double smoothing,
                       Tokenization tokenization = Tokenization::kWhitespace);

NgramModel parse_ngram_model(std::string_view json_text,
                             std::string_view origin = "<string>");
NgramModel load_ngram_model(const std::filesystem::path& path);
void save_ngram_model(const NgramModel& model, const std::filesystem::path& path);

/// Loads either schema: objects with "nodes" are tree models, objects with
/// "tables" are n-gram models.
std::unique_ptr<LanguageModel> load_model(const std::filesystem::path& path);

}  // namespace declab
