#include "declab/tree_model.hpp"

#include <cmath>
#include <deque>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "declab/errors.hpp"
#include "declab/rng.hpp"

namespace declab {
namespace {

using nlohmann::json;

std::vector<std::string> split_prefix(const std::string& key) {
  std::vector<std::string> parts;
  if (key.empty()) return parts;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = key.find(' ', start);
    if (pos == std::string::npos) {
      parts.push_back(key.substr(start));
      break;
    }
    parts.push_back(key.substr(start, pos - start));
    start = pos + 1;
  }
  return parts;
}

std::string prefix_to_key(const Vocabulary& vocab, const std::vector<TokenId>& prefix) {
  std::string key;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (i > 0) key += ' ';
    key += vocab.token(prefix[i]);
  }
  return key;
}

// File-level tolerance is looser than the runtime invariant: distributions
// within 1e-6 are accepted and renormalized; within 1e-9 they are kept
// bit-exact so hand-written files round-trip.
ConditionalDistribution node_distribution(const std::string& origin,
                                          const std::string& key,
                                          std::vector<double> probs) {
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw ParseError(std::string(origin) + ": node \"" + key +
                       "\" has probability outside [0,1]");
    }
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    std::ostringstream msg;
    msg << origin << ": node \"" << key << "\" probabilities sum to " << sum
        << ", off by more than 1e-6";
    throw ParseError(msg.str());
  }
  if (std::abs(sum - 1.0) > ConditionalDistribution::kSumTolerance) {
    for (double& p : probs) p /= sum;
  }
  return ConditionalDistribution(std::move(probs));
}

}  // namespace

TreeModel::TreeModel(Vocabulary vocabulary, std::size_t depth, NodeMap nodes)
    : vocabulary_(std::move(vocabulary)), depth_(depth), nodes_(std::move(nodes)) {
  if (depth_ == 0) throw InputError("tree model depth must be >= 1");
  const std::size_t v = vocabulary_.size();
  for (const auto& [prefix, dist] : nodes_) {
    if (dist.size() != v) {
      throw InputError("tree node \"" + prefix_to_key(vocabulary_, prefix) +
                       "\" has " + std::to_string(dist.size()) +
                       " probabilities, vocabulary has " + std::to_string(v));
    }
    if (prefix.size() >= depth_) {
      throw InputError("tree node \"" + prefix_to_key(vocabulary_, prefix) +
                       "\" is at depth " + std::to_string(prefix.size()) +
                       ", beyond declared depth " + std::to_string(depth_));
    }
  }
  // Reachability: every positive-probability prefix shorter than depth needs
  // a stored distribution.
  std::deque<std::vector<TokenId>> frontier;
  frontier.push_back({});
  while (!frontier.empty()) {
    std::vector<TokenId> prefix = std::move(frontier.front());
    frontier.pop_front();
    auto it = nodes_.find(prefix);
    if (it == nodes_.end()) {
      throw InputError("missing distribution for reachable prefix \"" +
                       prefix_to_key(vocabulary_, prefix) + "\"");
    }
    if (prefix.size() + 1 >= depth_) continue;
    for (std::size_t t = 0; t < v; ++t) {
      if (it->second[t] > 0.0) {
        std::vector<TokenId> child = prefix;
        child.push_back(static_cast<TokenId>(t));
        frontier.push_back(std::move(child));
      }
    }
  }
}

ConditionalDistribution TreeModel::next(const Context& context,
                                        const TokenSequence& partial) const {
  const TokenSequence full = concat(context.prompt, partial);
  if (full.size() >= depth_) {
    throw InputError("history of length " + std::to_string(full.size()) +
                     " reaches beyond tree depth " + std::to_string(depth_));
  }
  for (TokenId id : full.ids) {
    if (!vocabulary_.contains(id)) {
      throw InputError("token id " + std::to_string(id) + " out of range");
    }
  }
  auto it = nodes_.find(full.ids);
  if (it == nodes_.end()) {
    throw InputError("no distribution stored for prefix \"" +
                     prefix_to_key(vocabulary_, full.ids) +
                     "\" (unreachable under this model)");
  }
  return it->second;
}

TreeModel parse_tree_model(std::string_view json_text, std::string_view origin) {
  const std::string where(origin);
  // Callback parse to catch duplicate object keys, which DOM parsing would
  // silently collapse.
  std::vector<std::set<std::string>> key_stack;
  std::string duplicate;
  json::parser_callback_t cb = [&](int, json::parse_event_t event, json& parsed) {
    if (event == json::parse_event_t::object_start) {
      key_stack.emplace_back();
    } else if (event == json::parse_event_t::object_end) {
      key_stack.pop_back();
    } else if (event == json::parse_event_t::key) {
      const auto key = parsed.get<std::string>();
      if (!key_stack.empty() && !key_stack.back().insert(key).second &&
          duplicate.empty()) {
        duplicate = key;
      }
    }
    return true;
  };

  json doc;
  try {
    doc = json::parse(json_text, cb);
  } catch (const json::exception& e) {
    throw ParseError(where + ": " + e.what());
  }
  if (!duplicate.empty()) {
    throw ParseError(where + ": duplicate prefix \"" + duplicate + "\"");
  }
  if (!doc.is_object() || !doc.contains("vocabulary") || !doc.contains("depth") ||
      !doc.contains("nodes")) {
    throw ParseError(where + ": expected fields vocabulary, depth, nodes");
  }

  std::vector<std::string> tokens;
  try {
    tokens = doc.at("vocabulary").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ParseError(where + ": bad vocabulary: " + e.what());
  }
  Vocabulary vocab(std::move(tokens));

  if (!doc.at("depth").is_number_integer() || doc.at("depth").get<long long>() < 1) {
    throw ParseError(where + ": depth must be a positive integer");
  }
  const auto depth = doc.at("depth").get<std::size_t>();

  if (!doc.at("nodes").is_object()) {
    throw ParseError(where + ": nodes must be an object");
  }

  TreeModel::NodeMap nodes;
  for (const auto& [key, value] : doc.at("nodes").items()) {
    std::vector<TokenId> prefix;
    for (const auto& part : split_prefix(key)) {
      auto id = vocab.find(part);
      if (!id) {
        throw ParseError(where + ": node \"" + key + "\" uses unknown token \"" +
                         part + "\"");
      }
      prefix.push_back(*id);
    }
    if (prefix.size() >= depth) {
      throw ParseError(where + ": node \"" + key + "\" lies at or beyond depth " +
                       std::to_string(depth));
    }
    std::vector<double> probs;
    try {
      probs = value.get<std::vector<double>>();
    } catch (const json::exception&) {
      throw ParseError(where + ": node \"" + key + "\" is not a probability array");
    }
    if (probs.size() != vocab.size()) {
      throw ParseError(where + ": node \"" + key + "\" has " +
                       std::to_string(probs.size()) + " probabilities, expected " +
                       std::to_string(vocab.size()));
    }
    nodes.emplace(std::move(prefix), node_distribution(where, key, std::move(probs)));
  }

  try {
    return TreeModel(std::move(vocab), depth, std::move(nodes));
  } catch (const InputError& e) {
    throw ParseError(where + ": " + e.what());
  }
}

TreeModel load_tree_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open model file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_tree_model(buf.str(), path.string());
}

void save_tree_model(const TreeModel& model, const std::filesystem::path& path) {
  json nodes = json::object();
  for (const auto& [prefix, dist] : model.nodes()) {
    nodes[prefix_to_key(model.vocabulary(), prefix)] = dist.vec();
  }
  json doc;
  doc["vocabulary"] = model.vocabulary().tokens();
  doc["depth"] = model.depth();
  doc["nodes"] = std::move(nodes);

  std::ofstream out(path);
  if (!out) throw InputError("cannot write model file " + path.string());
  out << doc.dump(2) << '\n';
}

TreeModel counterexample_model() {
  Vocabulary vocab({"A", "B"});
  TreeModel::NodeMap nodes;
  nodes.emplace(std::vector<TokenId>{}, ConditionalDistribution({0.5, 0.5}));
  nodes.emplace(std::vector<TokenId>{0}, ConditionalDistribution({0.2, 0.8}));
  nodes.emplace(std::vector<TokenId>{1}, ConditionalDistribution({0.5, 0.5}));
  return TreeModel(std::move(vocab), 2, std::move(nodes));
}

TreeModel random_tree_model(std::size_t vocab_size, std::size_t depth,
                            std::uint64_t seed, double uniform_floor) {
  if (vocab_size < 1) throw InputError("vocab_size must be >= 1");
  if (!(uniform_floor >= 0.0 && uniform_floor < 1.0)) {
    throw InputError("uniform_floor must be in [0,1)");
  }
  std::vector<std::string> tokens;
  tokens.reserve(vocab_size);
  for (std::size_t i = 0; i < vocab_size; ++i) {
    if (vocab_size <= 26) {
      tokens.push_back(std::string(1, static_cast<char>('a' + i)));
    } else {
      tokens.push_back("t" + std::to_string(i));
    }
  }
  Vocabulary vocab(std::move(tokens));

  auto engine = rng::SeedDeriver(seed).mix("random_tree_model").engine();
  TreeModel::NodeMap nodes;
  std::deque<std::vector<TokenId>> frontier;
  frontier.push_back({});
  while (!frontier.empty()) {
    std::vector<TokenId> prefix = std::move(frontier.front());
    frontier.pop_front();
    std::vector<double> probs(vocab_size);
    double sum = 0.0;
    for (auto& p : probs) {
      p = -std::log(rng::uniform_unit_positive(engine));  // Exp(1) => Dirichlet(1)
      sum += p;
    }
    for (auto& p : probs) {
      p = (1.0 - uniform_floor) * (p / sum) +
          uniform_floor / static_cast<double>(vocab_size);
    }
    if (prefix.size() + 1 < depth) {
      for (std::size_t t = 0; t < vocab_size; ++t) {
        std::vector<TokenId> child = prefix;
        child.push_back(static_cast<TokenId>(t));
        frontier.push_back(std::move(child));
      }
    }
    nodes.emplace(std::move(prefix), ConditionalDistribution(std::move(probs)));
  }
  return TreeModel(std::move(vocab), depth, std::move(nodes));
}

}  // namespace declab
