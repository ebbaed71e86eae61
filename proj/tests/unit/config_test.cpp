#include "selfattn/config.hpp"
#include "test_support.hpp"

namespace selfattn {
namespace {

constexpr const char* minimal = R"(# comment line
d = 8
u = 4   # trailing comment
d_a = 6
r = 2
classes = 3
)";

TEST(RunConfig, ParsesKeysAndComments) {
  const auto c = RunConfig::parse(minimal);
  EXPECT_EQ(c.get("u"), "4");
  const auto m = c.model_config();
  EXPECT_EQ(m.embedding_dim, 8);
  EXPECT_EQ(m.lstm_units, 4);
  EXPECT_EQ(m.attention_units, 6);
  EXPECT_EQ(m.hops, 2);
  EXPECT_EQ(m.classes, 3);
  EXPECT_EQ(m.head, HeadKind::dense);
}

TEST(RunConfig, UnknownKeysAreRejectedEverywhere) {
  EXPECT_THROW(RunConfig::parse("d = 3\nhidden = 4\n"), ConfigError);
  auto c = RunConfig::parse(minimal);
  EXPECT_THROW(c.set("lrate", "0.1"), ConfigError);
  EXPECT_THROW(c.apply_override("lrate=0.1"), ConfigError);
  try {
    RunConfig::parse("d = 3\nnope = 1\n", "x.conf");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("x.conf:2"), std::string::npos) << e.what();
  }
}

TEST(RunConfig, MissingRequiredKeyIsReported) {
  const auto c = RunConfig::parse("d = 8\nu = 4\nd_a = 6\nclasses = 3\n");
  try {
    c.model_config();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("'r'"), std::string::npos) << e.what();
  }
}

TEST(RunConfig, OverridesReplaceFileValues) {
  auto c = RunConfig::parse(minimal);
  c.apply_override("r=5");
  c.apply_override(" head = pruned ");
  EXPECT_EQ(c.model_config().hops, 5);
  EXPECT_EQ(c.model_config().head, HeadKind::pruned);
  EXPECT_THROW(c.apply_override("r"), ConfigError);
}

TEST(RunConfig, MalformedValuesAreRejected) {
  auto c = RunConfig::parse(minimal);
  c.set("r", "two");
  EXPECT_THROW(c.model_config(), ConfigError);
  c = RunConfig::parse(minimal);
  c.set("head", "conv");
  EXPECT_THROW(c.model_config(), ConfigError);
  c = RunConfig::parse(minimal);
  c.set("lr", "-1");
  EXPECT_THROW(c.train_config(), ConfigError);
  c = RunConfig::parse(minimal);
  c.set("lowercase", "maybe");
  EXPECT_THROW(c.get_bool("lowercase", false), ConfigError);
  EXPECT_THROW(c.set("flatten_order", "column-major"), ConfigError);
  EXPECT_THROW(RunConfig::parse("just words\n"), ConfigError);
}

TEST(RunConfig, TrainingDefaultsPerTask) {
  const auto single = RunConfig::parse(minimal).train_config();
  EXPECT_EQ(single.optimizer, Optimizer::sgd);
  EXPECT_DOUBLE_EQ(single.learning_rate, 0.06);
  EXPECT_EQ(single.batch_size, 16u);
  EXPECT_DOUBLE_EQ(single.penalty_coeff, 1.0);
  EXPECT_DOUBLE_EQ(single.dropout, 0.5);
  EXPECT_DOUBLE_EQ(single.l2, 1e-4);
  EXPECT_EQ(single.clip, 0.5);

  auto c = RunConfig::parse(minimal);
  c.set("head", "gated-pair");
  const auto pair = c.train_config();
  EXPECT_EQ(pair.optimizer, Optimizer::adagrad);
  EXPECT_DOUBLE_EQ(pair.learning_rate, 0.01);
  EXPECT_DOUBLE_EQ(pair.penalty_coeff, 0.3);
  EXPECT_EQ(pair.dropout, 0.0);
  EXPECT_EQ(pair.l2, 0.0);
  c.set("clip", "none");
  EXPECT_FALSE(c.train_config().clip.has_value());
}

TEST(RunConfig, SnapshotRoundTrips) {
  ModelConfig m = RunConfig::parse(minimal).model_config();
  m.vocab_size = 17;
  TrainConfig t;
  t.learning_rate = 0.1 + 0.2;
  t.clip.reset();
  const auto text = RunConfig::from(m, t).to_text();
  const auto back = RunConfig::parse(text);
  EXPECT_EQ(back.model_config().vocab_size, 17);
  EXPECT_EQ(back.train_config().learning_rate, 0.1 + 0.2);
  EXPECT_FALSE(back.train_config().clip.has_value());
  EXPECT_NE(text.find("flatten_order = row-major"), std::string::npos);
}

TEST(RunConfig, LoadsShippedPresets) {
  for (const char* name : {"toy.conf", "yelp_dense.conf", "yelp_pruned.conf", "age_dense.conf", "snli_gated.conf"}) {
    const auto c = RunConfig::load(std::filesystem::path(SELFATTN_CONFIG_DIR) / name);
    EXPECT_NO_THROW(c.model_config()) << name;
    EXPECT_NO_THROW(c.train_config()) << name;
  }
  EXPECT_THROW(RunConfig::load("/nonexistent/file.conf"), ConfigError);
}

}  // namespace
}  // namespace selfattn
