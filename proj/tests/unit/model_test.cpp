#include "selfattn/model.hpp"
#include "selfattn/ops.hpp"
#include "test_support.hpp"

namespace selfattn {
namespace {

ModelConfig small(HeadKind head = HeadKind::dense) {
  ModelConfig c;
  c.vocab_size = 12;
  c.embedding_dim = 4;
  c.lstm_units = 3;
  c.attention_units = 5;
  c.hops = 2;
  c.mlp_units = 6;
  c.row_group_units = 2;
  c.column_group_units = 2;
  c.factor_units = 4;
  c.classes = 3;
  c.head = head;
  return c;
}

TEST(ModelConfig, RejectsNonPositiveSizes) {
  auto c = small();
  c.hops = 0;
  EXPECT_THROW(c.validate(), InvalidInputError);
  c = small();
  c.classes = 1;
  EXPECT_THROW(c.validate(), InvalidInputError);
  EXPECT_THROW(parse_head_kind("conv"), InvalidInputError);
  EXPECT_EQ(parse_head_kind("gated-pair"), HeadKind::gated_pair);
}

TEST(ModelInit, ReservedRowsBiasesAndDeterminism) {
  const auto c = small();
  const auto model = Model<double>::initialize(c, 3);
  EXPECT_TRUE((model.param("embedding").mat().row(0).array() == 0.0).all());
  EXPECT_LE(model.param("embedding").flat().cwiseAbs().maxCoeff(), 0.1);
  for (const char* name : {"lstm.forward.bias", "lstm.backward.bias"}) {
    const auto& b = model.param(name).flat();
    EXPECT_TRUE((b.segment(0, 3).array() == 0.0).all());
    EXPECT_TRUE((b.segment(3, 3).array() == 1.0).all()) << name;
    EXPECT_TRUE((b.segment(6, 6).array() == 0.0).all());
  }
  EXPECT_TRUE(Model<double>::initialize(c, 3) == model);
  EXPECT_FALSE(Model<double>::initialize(c, 4) == model);
}

TEST(ModelInit, ShapesFollowSpecs) {
  for (auto head : {HeadKind::dense, HeadKind::pruned, HeadKind::gated_pair}) {
    const auto model = Model<float>::initialize(small(head), 1);
    for (std::size_t i = 0; i < model.size(); ++i) EXPECT_EQ(model.param(i).shape(), model.specs()[i].shape);
  }
  EXPECT_EQ(Model<float>::initialize(small(), 1).param("attention.ws2").shape(), (Shape{2, 5}));
}

TEST(Encode, EmbeddingIsPoolOfAnnotation) {
  const auto model = Model<double>::initialize(small(), 5);
  Graph<double> g;
  const auto bound = bind(g, model, false);
  const auto enc = encode(bound, Sentence::unpadded({2, 7, 4, 9}));
  EXPECT_EQ(enc.annotation.shape(), (Shape{2, 4}));
  EXPECT_EQ(enc.embedding.shape(), (Shape{2, 6}));
  EXPECT_EQ(enc.embedding.value(), pool(enc.annotation, enc.hidden).value());
}

TEST(Predict, HeadKindsSelectTheirPath) {
  const auto dense = Model<double>::initialize(small(), 1);
  const auto gated = Model<double>::initialize(small(HeadKind::gated_pair), 1);
  Graph<double> g;
  const auto s = Sentence::unpadded({2, 3, 4});
  EXPECT_EQ(predict(bind(g, dense, false), s).logits.value().size(), 3);
  EXPECT_THROW(predict(bind(g, gated, false), s), InvalidInputError);
  EXPECT_THROW(predict_pair(bind(g, dense, false), s, s), InvalidInputError);
  const auto pair = predict_pair(bind(g, gated, false), s, Sentence::unpadded({5, 6}));
  EXPECT_EQ(pair.encodings.size(), 2u);
  EXPECT_EQ(pair.logits.value().size(), 3);
}

TEST(Predict, PaddedSentenceMatchesUnpadded) {
  for (auto head : {HeadKind::dense, HeadKind::pruned}) {
    const auto model = Model<double>::initialize(small(head), 2);
    Graph<double> g;
    const auto bound = bind(g, model, false);
    const auto alone = predict(bound, Sentence::unpadded({3, 8, 5})).logits.value();
    const auto padded = predict(bound, Sentence{{3, 8, 5, 0, 0}, {1, 1, 1, 0, 0}}).logits.value();
    EXPECT_EQ(alone, padded);
  }
}

TEST(BindLeaves, RejectsWrongCountOrShape) {
  const auto model = Model<double>::initialize(small(), 1);
  Graph<double> g;
  std::vector<Var<double>> leaves;
  for (std::size_t i = 0; i < model.size(); ++i) leaves.push_back(g.leaf(model.param(i)));
  auto short_list = leaves;
  short_list.pop_back();
  EXPECT_THROW(bind_leaves(model, short_list), InvalidInputError);
  leaves[1] = g.leaf(Tensor<double>(Shape{1, 1}));
  EXPECT_THROW(bind_leaves(model, leaves), DimensionError);
}

}  // namespace
}  // namespace selfattn
