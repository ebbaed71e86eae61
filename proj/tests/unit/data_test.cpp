#include "selfattn/data.hpp"
#include "selfattn/synthetic.hpp"
#include "selfattn/training.hpp"
#include "test_support.hpp"

#include <sstream>

namespace selfattn {
namespace {

using testing::TempDir;

std::vector<RawExample> parse(const std::string& text, bool pair = false) {
  std::istringstream in(text);
  return parse_raw_examples(in, "mem", pair);
}

TEST(Vocab, ReservedIdsComeFirst) {
  const Vocab v;
  EXPECT_EQ(v.size(), 2u);
  EXPECT_EQ(v.id("<pad>"), Vocab::pad);
  EXPECT_EQ(v.id("anything"), Vocab::unk);
  EXPECT_THROW(Vocab({"x", "x"}), InvalidInputError);
}

TEST(Vocab, MinCountFiltersRareTokens) {
  const std::vector<TokenizedSentence> corpus{{"a", "a", "b"}};
  const auto two = build_vocab(corpus, 2);
  EXPECT_EQ(two.size(), 3u);
  EXPECT_TRUE(two.contains("a"));
  EXPECT_FALSE(two.contains("b"));
  EXPECT_EQ(two.id("b"), Vocab::unk);
  const auto one = build_vocab(corpus, 1);
  EXPECT_EQ(one.size(), 4u);
  EXPECT_EQ(one.id("a"), 2);
  EXPECT_EQ(one.id("b"), 3);
}

TEST(Vocab, FrequencyThenLexicographicOrder) {
  const auto v = build_vocab({{"c", "b", "a"}, {"b", "c"}, {"d"}}, 1);
  EXPECT_EQ(v.tokens(), (std::vector<std::string>{"<pad>", "<unk>", "b", "c", "a", "d"}));
  EXPECT_EQ(build_vocab({{"c", "b", "a"}, {"b", "c"}, {"d"}}, 1), v);
}

TEST(Vocab, EmptyCorpusOrBadMinCountIsRejected) {
  EXPECT_THROW(build_vocab({}, 1), InvalidInputError);
  EXPECT_THROW(build_vocab({{"a"}}, 0), InvalidInputError);
}

TEST(VocabProperty, IdsAreBijectiveOverRegularTokens) {
  const auto task = make_keyword_task(KeywordTaskSpec{});
  const auto v = build_vocab(corpus_of(task.train), 1);
  for (std::size_t i = 2; i < v.size(); ++i) EXPECT_EQ(v.id(v.token(static_cast<TokenId>(i))), static_cast<TokenId>(i));
}

TEST(Dataset, ParsesLabelAndTokens) {
  const auto raw = parse("3\tgood food\n\n1\tbad\n");
  ASSERT_EQ(raw.size(), 2u);
  EXPECT_EQ(raw[0].label, 3);
  EXPECT_EQ(raw[0].first, (TokenizedSentence{"good", "food"}));
  const Vocab v({"good"});
  const auto data = std::get<std::vector<Example>>(to_dataset(raw, v, false));
  EXPECT_EQ(data[0].tokens, (std::vector<TokenId>{2, Vocab::unk}));
}

TEST(Dataset, PairLinesAreLabelPremiseHypothesis) {
  const auto raw = parse("2\tthe premise\ta hypothesis here\n", true);
  ASSERT_EQ(raw.size(), 1u);
  const Vocab v({"premise", "hypothesis"});
  const auto data = std::get<std::vector<PairExample>>(to_dataset(raw, v, true));
  EXPECT_EQ(data[0].label, 2);
  EXPECT_EQ(data[0].premise.size(), 2u);
  EXPECT_EQ(data[0].hypothesis.size(), 3u);
  EXPECT_EQ(data[0].hypothesis[1], 3);
}

TEST(Dataset, MalformedLinesReportLineNumber) {
  auto expect_line = [](const std::string& text, std::size_t line, bool pair = false) {
    try {
      parse(text, pair);
      FAIL() << "expected ParseError for: " << text;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.line(), line) << e.what();
    }
  };
  expect_line("0\tok\nno tab here\n", 2);
  expect_line("0\tok\n\nx\tbad label\n", 3);
  expect_line("-1\tnegative\n", 1);
  expect_line("0\t   \n", 1);
  expect_line("0\tonly premise\n", 1, true);
}

TEST(Dataset, LowercaseFlag) {
  std::istringstream in("0\tGood FOOD\n");
  EXPECT_EQ(parse_raw_examples(in, "mem", false, true)[0].first, (TokenizedSentence{"good", "food"}));
  EXPECT_EQ(tokenize("  Mixed\tcase  ", false), (TokenizedSentence{"Mixed", "case"}));
}

TEST(Dataset, TokenCountsSurviveFileRoundTrip) {
  TempDir dir;
  const auto task = make_keyword_task(KeywordTaskSpec{});
  std::ostringstream text;
  write_examples(text, task.train);
  const auto path = dir.write("train.tsv", text.str());
  const auto vocab = build_vocab(corpus_of(task.train), 1);
  const auto data = std::get<std::vector<Example>>(load_dataset(path, vocab, false));
  ASSERT_EQ(data.size(), task.train.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(data[i].tokens.size(), task.train[i].first.size());
    EXPECT_EQ(data[i].label, task.train[i].label);
  }
  EXPECT_THROW(load_dataset(dir.file("missing.tsv"), vocab, false), std::runtime_error);
}

TEST(Pretrained, FullCoverageCopiesVectorsExactly) {
  TempDir dir;
  const Vocab v({"cat", "dog"});
  const auto path = dir.write("vec.txt", "cat 0.5 -1.25 3\ndog 1 2 3\nunused 9 9 9\n");
  std::mt19937_64 rng(1);
  const auto table = load_pretrained(path, v, 3, rng);
  EXPECT_EQ(table.coverage, 1.0);
  EXPECT_EQ(table.table.mat()(2, 0), 0.5f);
  EXPECT_EQ(table.table.mat()(2, 1), -1.25f);
  EXPECT_EQ(table.table.mat()(3, 2), 3.0f);
  EXPECT_TRUE((table.table.mat().row(0).array() == 0.0f).all());
  EXPECT_EQ(v.tokens(), (std::vector<std::string>{"<pad>", "<unk>", "cat", "dog"}));
}

TEST(Pretrained, EmptyFileGivesZeroCoverageAndRandomRows) {
  TempDir dir;
  const Vocab v({"cat", "dog"});
  std::mt19937_64 rng(1);
  const auto table = load_pretrained(dir.write("vec.txt", ""), v, 4, rng);
  EXPECT_EQ(table.coverage, 0.0);
  EXPECT_LE(table.table.mat().bottomRows(3).cwiseAbs().maxCoeff(), 0.1f);
  EXPECT_GT(table.table.mat().bottomRows(3).cwiseAbs().maxCoeff(), 0.0f);
}

TEST(Pretrained, PartialCoverageAndDimensionErrors) {
  TempDir dir;
  const Vocab v({"cat", "dog"});
  std::mt19937_64 rng(1);
  EXPECT_EQ(load_pretrained(dir.write("half.txt", "dog 1 2\n"), v, 2, rng).coverage, 0.5);
  try {
    load_pretrained(dir.write("bad.txt", "cat 1 2\ndog 1 2 3\n"), v, 2, rng);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Batching, EqualLengthsNeedNoPadding) {
  const Dataset data = std::vector<Example>{{{2, 3}, 0}, {{4, 5}, 1}, {{6, 7}, 0}};
  for (const auto& batch : make_batches(data, 2, nullptr)) {
    for (const auto& s : batch.first) {
      EXPECT_EQ(s.tokens.size(), 2u);
      EXPECT_EQ(s.mask, (Mask{1, 1}));
    }
  }
}

TEST(Batching, PadsToLongestAndKeepsEveryExample) {
  const Dataset data = std::vector<Example>{{{2}, 0}, {{4, 5, 6}, 1}, {{6, 7}, 0}, {{3, 3}, 1}, {{9}, 1}};
  std::mt19937_64 rng(3);
  const auto batches = make_batches(data, 2, &rng);
  ASSERT_EQ(batches.size(), 3u);
  std::vector<std::size_t> seen;
  for (const auto& batch : batches) {
    std::size_t longest = 0;
    for (std::size_t j = 0; j < batch.size(); ++j) {
      const auto& ex = std::get<std::vector<Example>>(data)[batch.indices[j]];
      longest = std::max(longest, ex.tokens.size());
      EXPECT_EQ(batch.labels[j], ex.label);
      for (std::size_t t = 0; t < batch.first[j].tokens.size(); ++t) {
        const bool real = t < ex.tokens.size();
        EXPECT_EQ(batch.first[j].mask[t], real ? 1 : 0);
        EXPECT_EQ(batch.first[j].tokens[t], real ? ex.tokens[t] : Vocab::pad);
      }
      seen.push_back(batch.indices[j]);
    }
    for (const auto& s : batch.first) EXPECT_EQ(s.tokens.size(), longest);
  }
  std::sort(seen.begin(), seen.end());
  EXPECT_EQ(seen, (std::vector<std::size_t>{0, 1, 2, 3, 4}));
  EXPECT_THROW(make_batches(data, 0, nullptr), InvalidInputError);
}

TEST(Batching, SingleExampleMaskIsAllTrue) {
  const Dataset data = std::vector<Example>{{{2, 3, 4}, 0}};
  EXPECT_EQ(make_batches(data, 8, nullptr).front().first.front().mask, (Mask{1, 1, 1}));
}

TEST(Batching, BatchedPredictionsEqualPerExamplePredictions) {
  ModelConfig c;
  c.vocab_size = 20;
  c.embedding_dim = 5;
  c.lstm_units = 4;
  c.attention_units = 6;
  c.hops = 3;
  c.mlp_units = 7;
  c.classes = 3;
  const auto model = Model<double>::initialize(c, 8);
  std::vector<Example> examples;
  std::mt19937_64 rng(2);
  for (int i = 0; i < 9; ++i) {
    std::vector<TokenId> tokens(1 + rng() % 9);
    for (auto& t : tokens) t = static_cast<TokenId>(2 + rng() % 18);
    examples.push_back({tokens, 0});
  }
  const auto batched = predictions(model, Dataset(examples), 4);
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto alone = predictions(model, Dataset(std::vector<Example>{examples[i]}), 1).front();
    EXPECT_EQ(batched[i].first, alone.first);
    EXPECT_NEAR(batched[i].second, alone.second, 1e-6);
  }
}

TEST(Synthetic, BalancedAndSeeded) {
  KeywordTaskSpec spec;
  spec.classes = 3;
  spec.train_size = 30;
  const auto a = make_keyword_task(spec);
  std::vector<int> counts(3, 0);
  for (const auto& ex : a.train) ++counts[static_cast<std::size_t>(ex.label)];
  EXPECT_EQ(counts, (std::vector<int>{10, 10, 10}));
  const auto b = make_keyword_task(spec);
  for (std::size_t i = 0; i < a.train.size(); ++i) EXPECT_EQ(a.train[i].first, b.train[i].first);
}

}  // namespace
}  // namespace selfattn
