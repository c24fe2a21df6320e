#include "declab/ngram_model.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "declab/errors.hpp"

namespace declab {
namespace {

using nlohmann::json;

std::vector<std::string> split_on_space(const std::string& key) {
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

}  // namespace

Tokenization parse_tokenization(std::string_view name) {
  if (name == "whitespace") return Tokenization::kWhitespace;
  if (name == "char") return Tokenization::kChar;
  throw InputError("unknown tokenization mode \"" + std::string(name) +
                   "\" (expected whitespace or char)");
}

std::string_view tokenization_name(Tokenization mode) {
  return mode == Tokenization::kWhitespace ? "whitespace" : "char";
}

std::vector<std::string> tokenize(std::string_view text, Tokenization mode) {
  std::vector<std::string> tokens;
  if (mode == Tokenization::kWhitespace) {
    std::string current;
    for (char c : text) {
      if (std::isspace(static_cast<unsigned char>(c))) {
        if (!current.empty()) tokens.push_back(std::move(current));
        current.clear();
      } else {
        current += c;
      }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
  } else {
    for (char c : text) {
      if (c == '\n' || c == '\r') continue;
      tokens.push_back(std::string(1, c));
    }
  }
  return tokens;
}

NgramModel::NgramModel(Vocabulary vocabulary, std::size_t order, double smoothing,
                       Tables tables, Tokenization tokenization)
    : vocabulary_(std::move(vocabulary)),
      order_(order),
      smoothing_(smoothing),
      tables_(std::move(tables)),
      tokenization_(tokenization) {
  if (order_ < 1) throw InputError("n-gram order must be >= 1");
  if (!(smoothing_ > 0.0)) throw InputError("smoothing constant must be > 0");
  if (tables_.size() != order_) {
    throw InputError("expected " + std::to_string(order_) +
                     " context tables, got " + std::to_string(tables_.size()));
  }
  const std::size_t v = vocabulary_.size();
  for (const auto& table : tables_) {
    for (const auto& [key, row] : table) {
      if (row.counts.size() != v) {
        throw InputError("count row width " + std::to_string(row.counts.size()) +
                         " does not match vocabulary size " + std::to_string(v));
      }
    }
  }
}

std::string NgramModel::context_key(std::span<const TokenId> context) {
  std::string key;
  key.reserve(context.size() * sizeof(TokenId));
  for (TokenId id : context) {
    const auto u = static_cast<std::uint32_t>(id);
    key.push_back(static_cast<char>(u & 0xff));
    key.push_back(static_cast<char>((u >> 8) & 0xff));
    key.push_back(static_cast<char>((u >> 16) & 0xff));
    key.push_back(static_cast<char>((u >> 24) & 0xff));
  }
  return key;
}

ConditionalDistribution NgramModel::next(const Context& context,
                                         const TokenSequence& partial) const {
  const TokenSequence full = concat(context.prompt, partial);
  for (TokenId id : full.ids) {
    if (!vocabulary_.contains(id)) {
      throw InputError("token id " + std::to_string(id) + " out of range");
    }
  }
  const std::size_t ctx_len = std::min(full.size(), order_ - 1);
  const std::span<const TokenId> ctx(full.ids.data() + (full.size() - ctx_len),
                                     ctx_len);
  const auto& table = tables_[ctx_len];
  const auto it = table.find(context_key(ctx));

  const std::size_t v = vocabulary_.size();
  const double k = smoothing_;
  std::vector<double> probs(v);
  if (it == table.end()) {
    // Unseen context: counts are all zero, so the smoothed conditional is
    // exactly uniform.
    const double p = 1.0 / static_cast<double>(v);
    for (auto& x : probs) x = p;
  } else {
    const double denom = static_cast<double>(it->second.total) +
                         k * static_cast<double>(v);
    for (std::size_t t = 0; t < v; ++t) {
      probs[t] = (static_cast<double>(it->second.counts[t]) + k) / denom;
    }
  }
  return ConditionalDistribution(std::move(probs));
}

NgramModel train_ngram(Vocabulary vocabulary, std::span<const TokenId> corpus,
                       std::size_t order, double smoothing,
                       Tokenization tokenization) {
  if (corpus.empty()) throw InputError("corpus is empty");
  if (order < 1) throw InputError("n-gram order must be >= 1");
  if (!(smoothing > 0.0)) throw InputError("smoothing constant must be > 0");
  for (TokenId id : corpus) {
    if (!vocabulary.contains(id)) {
      throw InputError("corpus token id " + std::to_string(id) + " out of range");
    }
  }

  const std::size_t v = vocabulary.size();
  NgramModel::Tables tables(order);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const std::size_t max_ctx = std::min(i, order - 1);
    for (std::size_t j = 0; j <= max_ctx; ++j) {
      const std::span<const TokenId> ctx(corpus.data() + (i - j), j);
      auto [it, inserted] =
          tables[j].try_emplace(NgramModel::context_key(ctx));
      if (inserted) it->second.counts.assign(v, 0);
      ++it->second.counts[static_cast<std::size_t>(corpus[i])];
      ++it->second.total;
    }
  }
  return NgramModel(std::move(vocabulary), order, smoothing, std::move(tables),
                    tokenization);
}

NgramModel train_ngram(const std::vector<std::string>& corpus_tokens,
                       std::size_t order, double smoothing,
                       Tokenization tokenization) {
  if (corpus_tokens.empty()) throw InputError("corpus is empty");
  std::vector<std::string> vocab_tokens;
  std::unordered_map<std::string, TokenId> seen;
  for (const auto& t : corpus_tokens) {
    if (seen.emplace(t, static_cast<TokenId>(vocab_tokens.size())).second) {
      vocab_tokens.push_back(t);
    }
  }
  Vocabulary vocab(std::move(vocab_tokens));
  std::vector<TokenId> ids;
  ids.reserve(corpus_tokens.size());
  for (const auto& t : corpus_tokens) ids.push_back(seen.at(t));
  return train_ngram(std::move(vocab), ids, order, smoothing, tokenization);
}

NgramModel parse_ngram_model(std::string_view json_text, std::string_view origin) {
  const std::string where(origin);
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ParseError(where + ": " + e.what());
  }
  try {
    if (!doc.is_object() || doc.value("format", "") != "ngram") {
      throw ParseError(where + ": expected an object with format \"ngram\"");
    }
    Vocabulary vocab(doc.at("vocabulary").get<std::vector<std::string>>());
    const auto order = doc.at("order").get<std::size_t>();
    const auto smoothing = doc.at("smoothing").get<double>();
    const auto tokenization =
        parse_tokenization(doc.value("tokenization", "whitespace"));

    const auto& tables_json = doc.at("tables");
    if (!tables_json.is_array() || tables_json.size() != order) {
      throw ParseError(where + ": tables must be an array of length order");
    }
    NgramModel::Tables tables(order);
    for (std::size_t j = 0; j < order; ++j) {
      for (const auto& [key, row] : tables_json[j].items()) {
        const auto parts = split_on_space(key);
        if (parts.size() != j) {
          throw ParseError(where + ": context \"" + key + "\" has " +
                           std::to_string(parts.size()) + " tokens in table " +
                           std::to_string(j));
        }
        std::vector<TokenId> ctx;
        for (const auto& p : parts) ctx.push_back(vocab.require(p));
        NgramModel::CountRow count_row;
        count_row.counts.assign(vocab.size(), 0);
        for (const auto& [tok, count] : row.items()) {
          const auto id = static_cast<std::size_t>(vocab.require(tok));
          count_row.counts[id] = count.get<std::uint64_t>();
          count_row.total += count_row.counts[id];
        }
        tables[j].emplace(NgramModel::context_key(ctx), std::move(count_row));
      }
    }
    return NgramModel(std::move(vocab), order, smoothing, std::move(tables),
                      tokenization);
  } catch (const json::exception& e) {
    throw ParseError(where + ": " + e.what());
  } catch (const InputError& e) {
    throw ParseError(where + ": " + e.what());
  }
}

NgramModel load_ngram_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open model file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_ngram_model(buf.str(), path.string());
}

void save_ngram_model(const NgramModel& model, const std::filesystem::path& path) {
  const auto& vocab = model.vocabulary();
  json tables = json::array();
  for (std::size_t j = 0; j < model.order(); ++j) {
    json table = json::object();
    for (const auto& [key, row] : model.tables()[j]) {
      // Decode the binary key back into token ids.
      std::vector<TokenId> ctx(j);
      for (std::size_t i = 0; i < j; ++i) {
        std::uint32_t u = 0;
        for (std::size_t b = 0; b < 4; ++b) {
          u |= static_cast<std::uint32_t>(
                   static_cast<unsigned char>(key[i * 4 + b]))
               << (8 * b);
        }
        ctx[i] = static_cast<TokenId>(u);
      }
      std::string name;
      for (std::size_t i = 0; i < j; ++i) {
        if (i > 0) name += ' ';
        name += vocab.token(ctx[i]);
      }
      json counts = json::object();
      for (std::size_t t = 0; t < row.counts.size(); ++t) {
        if (row.counts[t] > 0) counts[vocab.token(static_cast<TokenId>(t))] = row.counts[t];
      }
      table[name] = std::move(counts);
    }
    tables.push_back(std::move(table));
  }

  json doc;
  doc["format"] = "ngram";
  doc["vocabulary"] = vocab.tokens();
  doc["order"] = model.order();
  doc["smoothing"] = model.smoothing();
  doc["tokenization"] = std::string(tokenization_name(model.tokenization()));
  doc["tables"] = std::move(tables);

  std::ofstream out(path);
  if (!out) throw InputError("cannot write model file " + path.string());
  out << doc.dump(2) << '\n';
}

std::unique_ptr<LanguageModel> load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open model file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  if (doc.is_object() && doc.contains("nodes")) {
    return std::make_unique<TreeModel>(parse_tree_model(text, path.string()));
  }
  if (doc.is_object() && doc.contains("tables")) {
    return std::make_unique<NgramModel>(parse_ngram_model(text, path.string()));
  }
  throw ParseError(path.string() +
                   ": unrecognized model schema (expected \"nodes\" or \"tables\")");
}

}  // namespace declab
