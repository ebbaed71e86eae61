#include "selfattn/synthetic.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <random>

namespace selfattn {

namespace {

RawExample make_sentence(const KeywordTaskSpec& spec, int label, int fillers, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> length(spec.min_length, spec.max_length);
  std::uniform_int_distribution<int> filler(0, fillers - 1);
  std::uniform_int_distribution<int> keyword(0, spec.keywords_per_class - 1);

  const int n = std::max(length(rng), spec.keywords_per_sentence);
  RawExample ex;
  ex.label = label;
  for (int i = 0; i < n; ++i) ex.first.push_back("w" + std::to_string(filler(rng)));

  std::vector<int> slots(static_cast<std::size_t>(n));
  std::iota(slots.begin(), slots.end(), 0);
  std::shuffle(slots.begin(), slots.end(), rng);
  for (int j = 0; j < spec.keywords_per_sentence; ++j) {
    ex.first[static_cast<std::size_t>(slots[static_cast<std::size_t>(j)])] =
        "k" + std::to_string(label) + "_" + std::to_string(keyword(rng));
  }
  return ex;
}

}  // namespace

KeywordTask make_keyword_task(const KeywordTaskSpec& spec) {
  const int fillers = spec.vocab_size - spec.classes * spec.keywords_per_class;
  if (spec.classes < 2 || spec.keywords_per_class < 1 || spec.keywords_per_sentence < 1 || fillers < 1 ||
      spec.min_length < 1 || spec.max_length < spec.min_length) {
    throw InvalidInputError("make_keyword_task: inconsistent task spec");
  }
  std::mt19937_64 rng(spec.seed);
  KeywordTask task;
  for (std::size_t i = 0; i < spec.train_size; ++i) {
    task.train.push_back(make_sentence(spec, static_cast<int>(i % static_cast<std::size_t>(spec.classes)), fillers, rng));
  }
  for (std::size_t i = 0; i < spec.dev_size; ++i) {
    task.dev.push_back(make_sentence(spec, static_cast<int>(i % static_cast<std::size_t>(spec.classes)), fillers, rng));
  }
  return task;
}

void write_examples(std::ostream& out, const std::vector<RawExample>& examples) {
  for (const auto& ex : examples) {
    out << ex.label << '\t';
    for (std::size_t i = 0; i < ex.first.size(); ++i) out << (i ? " " : "") << ex.first[i];
    if (!ex.second.empty()) {
      out << '\t';
      for (std::size_t i = 0; i < ex.second.size(); ++i) out << (i ? " " : "") << ex.second[i];
    }
    out << '\n';
  }
}

}  // namespace selfattn
