#pragma once

#include "selfattn/attention.hpp"
#include "selfattn/heads.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace selfattn {

enum class HeadKind { dense, pruned, gated_pair };

std::string to_string(HeadKind kind);
HeadKind parse_head_kind(std::string_view text);

struct ModelConfig {
  Index vocab_size = 0;
  Index embedding_dim = 100;     // d
  Index lstm_units = 300;        // u, per direction
  Index attention_units = 350;   // d_a
  Index hops = 30;               // r
  Index mlp_units = 2000;        // b
  Index row_group_units = 150;   // p
  Index column_group_units = 10; // q
  Index factor_units = 300;      // k
  Index classes = 5;
  HeadKind head = HeadKind::dense;
  bool train_embeddings = true;

  Index hidden_width() const { return 2 * lstm_units; }
  void validate() const;
};

/// Audit grouping of trainable scalars.
enum class ParamGroup { hidden_layer, softmax, biases, other };

std::string to_string(ParamGroup group);

struct ParameterSpec {
  std::string name;
  Shape shape;
  ParamGroup group;
  bool l2 = false;  // included in the weight-decay term
};

/// Every trainable tensor of a model, in canonical (checkpoint) order.
std::vector<ParameterSpec> parameter_specs(const ModelConfig& config);

struct AuditRow {
  std::string part;
  ParamGroup group;
  std::uint64_t count;
};

struct ParameterAudit {
  std::vector<AuditRow> rows;

  std::uint64_t total() const;
  std::uint64_t group_total(ParamGroup group) const;
  /// Count of a named part; throws if absent.
  std::uint64_t part(std::string_view name) const;
};

/// Counts parameters from shapes alone; nothing is allocated.
ParameterAudit count_params(const ModelConfig& config);

/// All trainable tensors of one model, stored in parameter_specs() order.
template <typename Scalar>
class Model {
 public:
  explicit Model(ModelConfig config);

  /// Random initialisation: Glorot-uniform weights, +-0.1 embeddings (PAD row zero),
  /// zero biases except LSTM forget-gate biases of 1.
  static Model initialize(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const std::vector<ParameterSpec>& specs() const { return specs_; }
  std::size_t size() const { return values_.size(); }

  Tensor<Scalar>& param(std::size_t i) { return values_[i]; }
  const Tensor<Scalar>& param(std::size_t i) const { return values_[i]; }
  Tensor<Scalar>& param(std::string_view name) { return values_[index_of(name)]; }
  const Tensor<Scalar>& param(std::string_view name) const { return values_[index_of(name)]; }
  std::size_t index_of(std::string_view name) const;

  template <typename Other>
  Model<Other> cast() const {
    Model<Other> out(config_);
    for (std::size_t i = 0; i < values_.size(); ++i) out.param(i) = values_[i].template cast<Other>();
    return out;
  }

  friend bool operator==(const Model& a, const Model& b) { return a.values_ == b.values_; }

 private:
  ModelConfig config_;
  std::vector<ParameterSpec> specs_;
  std::vector<Tensor<Scalar>> values_;
};

/// A model's parameters registered as leaves of one graph.
template <typename Scalar>
struct BoundModel {
  const Model<Scalar>* model = nullptr;
  Graph<Scalar>* graph = nullptr;
  std::vector<Var<Scalar>> params;

  Var<Scalar> embedding;
  LstmWeights<Scalar> forward;
  LstmWeights<Scalar> backward;
  AttentionWeights<Scalar> attention;
  MlpWeights<Scalar> mlp;
  PrunedWeights<Scalar> pruned;
  GatedWeights<Scalar> gated;
};

/// With `trainable` false every parameter is a constant and no backward rules are kept.
template <typename Scalar>
BoundModel<Scalar> bind(Graph<Scalar>& graph, const Model<Scalar>& model, bool trainable);

/// Wires existing leaves (one per parameter, in model order) into a BoundModel.
template <typename Scalar>
BoundModel<Scalar> bind_leaves(const Model<Scalar>& model, std::vector<Var<Scalar>> params);

/// Sentence encoding: hidden states, annotation A [r x n] and embedding M [r x 2u].
template <typename Scalar>
struct Encoding {
  HiddenStates<Scalar> hidden;
  Var<Scalar> annotation;
  Var<Scalar> embedding;
};

template <typename Scalar>
Encoding<Scalar> encode(const BoundModel<Scalar>& bound, const Sentence& sentence);

template <typename Scalar>
struct Prediction {
  Var<Scalar> logits;
  std::vector<Encoding<Scalar>> encodings;  // one per input sentence
};

/// Single-sentence classification (dense or pruned head).
template <typename Scalar>
Prediction<Scalar> predict(const BoundModel<Scalar>& bound, const Sentence& sentence,
                           DropoutSpec<Scalar> dropout = {});

/// Sentence-pair classification through the gated encoder and dense MLP.
template <typename Scalar>
Prediction<Scalar> predict_pair(const BoundModel<Scalar>& bound, const Sentence& hypothesis, const Sentence& premise,
                                DropoutSpec<Scalar> dropout = {});

}  // namespace selfattn
