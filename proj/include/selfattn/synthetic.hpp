#pragma once

#include "selfattn/data.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace selfattn {

/// Keyword-spotting toy task: the label is decided by class keywords planted among filler words.
struct KeywordTaskSpec {
  int classes = 2;
  std::size_t train_size = 200;
  std::size_t dev_size = 50;
  int vocab_size = 100;          // filler + keyword types, reserved ids excluded
  int keywords_per_class = 4;
  int keywords_per_sentence = 1;
  int min_length = 5;
  int max_length = 15;
  std::uint64_t seed = 7;
};

struct KeywordTask {
  std::vector<RawExample> train;
  std::vector<RawExample> dev;
};

/// Labels cycle through the classes, so every split is balanced up to one example.
KeywordTask make_keyword_task(const KeywordTaskSpec& spec);

/// Writes examples in the "label<TAB>tokens" dataset format.
void write_examples(std::ostream& out, const std::vector<RawExample>& examples);

}  // namespace selfattn
