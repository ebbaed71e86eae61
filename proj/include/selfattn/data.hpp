#pragma once

#include "selfattn/encoder.hpp"

#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

namespace selfattn {

/// Malformed input file; the message carries file and line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& origin, std::size_t line, const std::string& what)
      : std::runtime_error(origin + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/**
 * Token vocabulary. Ids 0 and 1 are PAD and UNK; the rest are ordered by
 * descending corpus frequency, ties broken lexicographically.
 */
class Vocab {
 public:
  static constexpr TokenId pad = 0;
  static constexpr TokenId unk = 1;

  Vocab();
  /// Reserved entries are added automatically; `tokens` lists ids 2, 3, ...
  explicit Vocab(const std::vector<std::string>& tokens);

  TokenId id(const std::string& token) const;
  const std::string& token(TokenId id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  bool contains(const std::string& token) const { return ids_.count(token) != 0; }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.tokens_ == b.tokens_; }

 private:
  void add(const std::string& token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> ids_;
};

using TokenizedSentence = std::vector<std::string>;

Vocab build_vocab(const std::vector<TokenizedSentence>& corpus, int min_count);

struct Example {
  std::vector<TokenId> tokens;
  int label = 0;
};

/// Labels 0/1/2 = entailment/contradiction/neutral for the entailment task.
struct PairExample {
  std::vector<TokenId> hypothesis;
  std::vector<TokenId> premise;
  int label = 0;
};

using Dataset = std::variant<std::vector<Example>, std::vector<PairExample>>;

std::size_t dataset_size(const Dataset& data);
bool is_pair(const Dataset& data);

/// One labelled line before vocabulary lookup. `second` is empty for single-sentence files.
struct RawExample {
  int label = 0;
  TokenizedSentence first;
  TokenizedSentence second;
};

/**
 * Reads "label<TAB>tokens" lines, or "label<TAB>premise<TAB>hypothesis"
 * when `pair` is set. Blank lines are skipped.
 */
std::vector<RawExample> read_raw_examples(const std::filesystem::path& path, bool pair, bool lowercase = false);
std::vector<RawExample> parse_raw_examples(std::istream& in, const std::string& origin, bool pair,
                                           bool lowercase = false);

std::vector<TokenId> to_ids(const TokenizedSentence& sentence, const Vocab& vocab);
TokenizedSentence tokenize(const std::string& line, bool lowercase = false);

Dataset to_dataset(const std::vector<RawExample>& raw, const Vocab& vocab, bool pair);
Dataset load_dataset(const std::filesystem::path& path, const Vocab& vocab, bool pair, bool lowercase = false);

/// Corpus view used for vocabulary construction (both sentences of pairs).
std::vector<TokenizedSentence> corpus_of(const std::vector<RawExample>& raw);

struct EmbeddingTable {
  Tensor<float> table;  // [vocab x dim]
  double coverage = 0;  // fraction of non-reserved tokens found in the file
};

/**
 * Pretrained vectors in whitespace text format ("token v1 ... v_dim").
 * Rows of tokens absent from the file are drawn uniform in +-0.1; the PAD
 * row is zero.
 */
EmbeddingTable load_pretrained(const std::filesystem::path& path, const Vocab& vocab, Index dim,
                               std::mt19937_64& rng);

/// Padded batch. `second` is filled only for pair data.
struct Batch {
  std::vector<std::size_t> indices;
  std::vector<Sentence> first;
  std::vector<Sentence> second;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

/// Pads each sequence to the longest in the batch with PAD and a zero mask.
std::vector<Sentence> pad_batch(const std::vector<const std::vector<TokenId>*>& sequences);

/// Splits into batches of `size` after a seeded shuffle (no shuffle when `rng` is null).
std::vector<Batch> make_batches(const Dataset& data, std::size_t size, std::mt19937_64* rng);

}  // namespace selfattn
