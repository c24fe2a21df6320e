#pragma once

#include <cstdint>
#include <filesystem>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "declab/language_model.hpp"

namespace declab {

struct TokenVectorHash {
  std::size_t operator()(const std::vector<TokenId>& v) const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (TokenId id : v) {
      h = (h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(id))) *
          0x100000001b3ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

/// Enumerable model defined by an explicit per-prefix conditional table up to
/// a fixed depth. Every prefix reachable with positive probability and length
/// < depth must have a stored distribution (checked at construction);
/// zero-probability prefixes may be omitted.
class TreeModel final : public LanguageModel {
public:
  using NodeMap = std::unordered_map<std::vector<TokenId>, ConditionalDistribution,
                                     TokenVectorHash>;

  TreeModel(Vocabulary vocabulary, std::size_t depth, NodeMap nodes);

  const Vocabulary& vocabulary() const override { return vocabulary_; }
  std::size_t max_enumeration_depth() const override { return depth_; }
  ConditionalDistribution next(const Context& context,
                               const TokenSequence& partial) const override;

  std::size_t depth() const { return depth_; }
  const NodeMap& nodes() const { return nodes_; }

private:
  Vocabulary vocabulary_;
  std::size_t depth_;
  NodeMap nodes_;
};

/// Parses the tree-model schema:
///   {"vocabulary": ["A","B"], "depth": 2,
///    "nodes": {"": [0.5,0.5], "A": [0.2,0.8], "B": [0.5,0.5]}}
/// Node keys are token strings joined by a single space; "" is the root.
/// Malformed files, duplicate prefixes, and per-node probabilities off by
/// more than 1e-6 are parse errors naming the offending node.
TreeModel parse_tree_model(std::string_view json_text,
                           std::string_view origin = "<string>");
TreeModel load_tree_model(const std::filesystem::path& path);
void save_tree_model(const TreeModel& model, const std::filesystem::path& path);

/// The two-branch depth-2 tree whose globally temperature-scaled joint
/// distribution cannot be matched by per-step temperature warps: leaves carry
/// joint mass {0.1, 0.4, 0.25, 0.25} while both root branches carry 0.5.
TreeModel counterexample_model();

/// Full-support random tree: every node distribution is Dirichlet(1) mixed
/// with `uniform_floor` of the uniform distribution. Deterministic in `seed`.
TreeModel random_tree_model(std::size_t vocab_size, std::size_t depth,
                            std::uint64_t seed, double uniform_floor = 0.0);

}  // namespace declab
