#include "selfattn/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

namespace selfattn {

Vocab::Vocab() {
  add("<pad>");
  add("<unk>");
}

Vocab::Vocab(const std::vector<std::string>& tokens) : Vocab() {
  for (const auto& t : tokens) add(t);
}

void Vocab::add(const std::string& token) {
  if (ids_.count(token)) throw InvalidInputError("duplicate vocabulary entry '" + token + "'");
  ids_.emplace(token, static_cast<TokenId>(tokens_.size()));
  tokens_.push_back(token);
}

TokenId Vocab::id(const std::string& token) const {
  const auto it = ids_.find(token);
  return it == ids_.end() ? unk : it->second;
}

Vocab build_vocab(const std::vector<TokenizedSentence>& corpus, int min_count) {
  if (min_count < 1) throw InvalidInputError("build_vocab: min_count must be >= 1");
  std::map<std::string, long> counts;
  for (const auto& sentence : corpus) {
    for (const auto& token : sentence) ++counts[token];
  }
  if (counts.empty()) throw InvalidInputError("build_vocab: empty corpus");
  std::vector<std::pair<std::string, long>> kept;
  for (const auto& [token, n] : counts) {
    if (n >= min_count) kept.emplace_back(token, n);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens;
  tokens.reserve(kept.size());
  for (auto& [token, n] : kept) tokens.push_back(std::move(token));
  return Vocab(tokens);
}

std::size_t dataset_size(const Dataset& data) {
  return std::visit([](const auto& v) { return v.size(); }, data);
}

bool is_pair(const Dataset& data) { return std::holds_alternative<std::vector<PairExample>>(data); }

TokenizedSentence tokenize(const std::string& line, bool lowercase) {
  TokenizedSentence out;
  std::istringstream in(line);
  std::string token;
  while (in >> token) {
    if (lowercase) {
      std::transform(token.begin(), token.end(), token.begin(),
                     [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    }
    out.push_back(std::move(token));
  }
  return out;
}

std::vector<RawExample> parse_raw_examples(std::istream& in, const std::string& origin, bool pair, bool lowercase) {
  std::vector<RawExample> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    std::vector<std::string> fields;
    std::size_t start = 0;
    for (std::size_t tab; (tab = line.find('\t', start)) != std::string::npos; start = tab + 1) {
      fields.push_back(line.substr(start, tab - start));
    }
    fields.push_back(line.substr(start));
    const std::size_t expected = pair ? 3 : 2;
    if (fields.size() != expected) {
      throw ParseError(origin, number,
                       "expected " + std::to_string(expected) + " tab-separated fields, found " +
                           std::to_string(fields.size()));
    }
    RawExample ex;
    const auto& label = fields[0];
    const auto [ptr, ec] = std::from_chars(label.data(), label.data() + label.size(), ex.label);
    if (ec != std::errc() || ptr != label.data() + label.size() || ex.label < 0) {
      throw ParseError(origin, number, "label '" + label + "' is not a non-negative integer");
    }
    ex.first = tokenize(fields[1], lowercase);
    if (pair) ex.second = tokenize(fields[2], lowercase);
    if (ex.first.empty() || (pair && ex.second.empty())) throw ParseError(origin, number, "empty sentence");
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<RawExample> read_raw_examples(const std::filesystem::path& path, bool pair, bool lowercase) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset '" + path.string() + "'");
  return parse_raw_examples(in, path.string(), pair, lowercase);
}

std::vector<TokenId> to_ids(const TokenizedSentence& sentence, const Vocab& vocab) {
  std::vector<TokenId> ids;
  ids.reserve(sentence.size());
  for (const auto& token : sentence) ids.push_back(vocab.id(token));
  return ids;
}

Dataset to_dataset(const std::vector<RawExample>& raw, const Vocab& vocab, bool pair) {
  if (!pair) {
    std::vector<Example> out;
    for (const auto& r : raw) out.push_back({to_ids(r.first, vocab), r.label});
    return out;
  }
  // Pair files list the premise first and the hypothesis second.
  std::vector<PairExample> out;
  for (const auto& r : raw) out.push_back({to_ids(r.second, vocab), to_ids(r.first, vocab), r.label});
  return out;
}

Dataset load_dataset(const std::filesystem::path& path, const Vocab& vocab, bool pair, bool lowercase) {
  return to_dataset(read_raw_examples(path, pair, lowercase), vocab, pair);
}

std::vector<TokenizedSentence> corpus_of(const std::vector<RawExample>& raw) {
  std::vector<TokenizedSentence> corpus;
  for (const auto& r : raw) {
    corpus.push_back(r.first);
    if (!r.second.empty()) corpus.push_back(r.second);
  }
  return corpus;
}

EmbeddingTable load_pretrained(const std::filesystem::path& path, const Vocab& vocab, Index dim,
                               std::mt19937_64& rng) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding file '" + path.string() + "'");

  EmbeddingTable out{Tensor<float>(Shape{static_cast<Index>(vocab.size()), dim}), 0};
  std::uniform_real_distribution<double> dist(-0.1, 0.1);
  for (Index i = 0; i < out.table.size(); ++i) out.table[i] = static_cast<float>(dist(rng));
  out.table.mat().row(Vocab::pad).setZero();

  std::vector<bool> covered(vocab.size(), false);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    std::istringstream fields(line);
    std::string token;
    if (!(fields >> token)) continue;
    std::vector<float> values;
    for (std::string v; fields >> v;) {
      float x = 0;
      const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
      if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw ParseError(path.string(), number, "bad number '" + v + "'");
      }
      values.push_back(x);
    }
    if (static_cast<Index>(values.size()) != dim) {
      throw ParseError(path.string(), number,
                       "vector for '" + token + "' has " + std::to_string(values.size()) + " values, expected " +
                           std::to_string(dim));
    }
    if (!vocab.contains(token)) continue;
    const TokenId id = vocab.id(token);
    if (id == Vocab::pad || id == Vocab::unk) continue;
    for (Index j = 0; j < dim; ++j) out.table.mat()(id, j) = values[static_cast<std::size_t>(j)];
    covered[static_cast<std::size_t>(id)] = true;
  }
  const auto regular = vocab.size() - 2;
  if (regular > 0) {
    out.coverage = static_cast<double>(std::count(covered.begin(), covered.end(), true)) / static_cast<double>(regular);
  }
  return out;
}

std::vector<Sentence> pad_batch(const std::vector<const std::vector<TokenId>*>& sequences) {
  std::size_t longest = 0;
  for (const auto* s : sequences) longest = std::max(longest, s->size());
  std::vector<Sentence> out;
  out.reserve(sequences.size());
  for (const auto* s : sequences) {
    Sentence padded;
    padded.tokens = *s;
    padded.tokens.resize(longest, Vocab::pad);
    padded.mask.assign(longest, 0);
    std::fill_n(padded.mask.begin(), s->size(), std::uint8_t{1});
    out.push_back(std::move(padded));
  }
  return out;
}

std::vector<Batch> make_batches(const Dataset& data, std::size_t size, std::mt19937_64* rng) {
  if (size < 1) throw InvalidInputError("batch size must be >= 1");
  const std::size_t total = dataset_size(data);
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (rng) std::shuffle(order.begin(), order.end(), *rng);

  std::vector<Batch> batches;
  for (std::size_t start = 0; start < total; start += size) {
    Batch batch;
    batch.indices.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(std::min(total, start + size)));
    std::vector<const std::vector<TokenId>*> first;
    std::vector<const std::vector<TokenId>*> second;
    std::visit(
        [&](const auto& examples) {
          using T = typename std::decay_t<decltype(examples)>::value_type;
          for (const std::size_t i : batch.indices) {
            const auto& ex = examples[i];
            if constexpr (std::is_same_v<T, Example>) {
              first.push_back(&ex.tokens);
            } else {
              first.push_back(&ex.hypothesis);
              second.push_back(&ex.premise);
            }
            batch.labels.push_back(ex.label);
          }
        },
        data);
    batch.first = pad_batch(first);
    if (!second.empty()) batch.second = pad_batch(second);
    batches.push_back(std::move(batch));
  }
  return batches;
}

}  // namespace selfattn
