#include "selfattn/checkpoint.hpp"
#include "selfattn/synthetic.hpp"
#include "test_support.hpp"

namespace selfattn {
namespace {

using testing::TempDir;

Checkpoint sample(HeadKind head = HeadKind::dense) {
  const Vocab vocab({"alpha", "beta", "gamma"});
  ModelConfig c;
  c.vocab_size = static_cast<Index>(vocab.size());
  c.embedding_dim = 3;
  c.lstm_units = 2;
  c.attention_units = 4;
  c.hops = 2;
  c.mlp_units = 5;
  c.row_group_units = 2;
  c.column_group_units = 3;
  c.factor_units = 2;
  c.classes = 3;
  c.head = head;
  TrainConfig t;
  t.optimizer = Optimizer::adagrad;
  t.learning_rate = 0.01;
  t.clip = std::nullopt;
  t.seed = 42;
  return {Model<float>::initialize(c, 7), t, vocab};
}

TEST(Checkpoint, RoundTripIsValueExact) {
  for (auto head : {HeadKind::dense, HeadKind::pruned, HeadKind::gated_pair}) {
    const auto original = sample(head);
    const auto bytes = serialize_checkpoint(original);
    const auto loaded = deserialize_checkpoint(bytes);
    EXPECT_TRUE(loaded.model == original.model);
    EXPECT_EQ(loaded.vocab, original.vocab);
    EXPECT_EQ(loaded.model.config().head, head);
    EXPECT_EQ(loaded.train.optimizer, Optimizer::adagrad);
    EXPECT_EQ(loaded.train.seed, 42u);
    EXPECT_FALSE(loaded.train.clip.has_value());
    EXPECT_EQ(serialize_checkpoint(loaded), bytes);
  }
}

TEST(Checkpoint, SaveLoadSaveGivesIdenticalFiles) {
  TempDir dir;
  save_checkpoint(dir.file("a.ckpt"), sample());
  save_checkpoint(dir.file("b.ckpt"), load_checkpoint(dir.file("a.ckpt")));
  EXPECT_EQ(testing::read_file(dir.file("a.ckpt")), testing::read_file(dir.file("b.ckpt")));
}

TEST(Checkpoint, LoadedModelReproducesAccuracy) {
  const auto original = sample();
  const auto loaded = deserialize_checkpoint(serialize_checkpoint(original));
  KeywordTaskSpec spec;
  spec.classes = 3;
  const auto task = make_keyword_task(spec);
  const auto data = to_dataset(task.dev, original.vocab, false);
  EXPECT_EQ(evaluate(loaded.model, data), evaluate(original.model, data));
}

TEST(Checkpoint, HeaderStartsWithMagicAndVersion) {
  const auto bytes = serialize_checkpoint(sample());
  ASSERT_GT(bytes.size(), 12u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 8), "SELFATTN");
  EXPECT_EQ(bytes[8], checkpoint_version);
  EXPECT_EQ(bytes[9], 0);
}

TEST(Checkpoint, TruncatedPayloadIsReported) {
  auto bytes = serialize_checkpoint(sample());
  bytes.resize(bytes.size() - 5);
  try {
    deserialize_checkpoint(bytes);
    FAIL() << "expected CheckpointError";
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos) << e.what();
  }
  bytes.resize(20);
  EXPECT_THROW(deserialize_checkpoint(bytes), CheckpointError);
}

TEST(Checkpoint, VersionMismatchIsReported) {
  auto bytes = serialize_checkpoint(sample());
  bytes[8] = 99;
  try {
    deserialize_checkpoint(bytes);
    FAIL() << "expected CheckpointError";
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("version mismatch"), std::string::npos) << e.what();
  }
  bytes[0] = 'X';
  EXPECT_THROW(deserialize_checkpoint(bytes), CheckpointError);
}

TEST(Checkpoint, ShapeMismatchAgainstConfigIsReported) {
  const auto ckpt = sample();
  auto expected = ckpt.model.config();
  EXPECT_NO_THROW(require_compatible(ckpt, expected));
  expected.vocab_size = 0;
  EXPECT_NO_THROW(require_compatible(ckpt, expected));
  expected.hops = 4;
  try {
    require_compatible(ckpt, expected);
    FAIL() << "expected CheckpointError";
  } catch (const CheckpointError& e) {
    EXPECT_NE(std::string(e.what()).find("shape mismatch"), std::string::npos) << e.what();
  }
}

TEST(Checkpoint, MissingFileIsAnError) {
  TempDir dir;
  EXPECT_THROW(load_checkpoint(dir.file("absent.ckpt")), CheckpointError);
}

}  // namespace
}  // namespace selfattn
