#include "selfattn/model.hpp"

#include <algorithm>
#include <stdexcept>

namespace selfattn {

std::string to_string(HeadKind kind) {
  switch (kind) {
    case HeadKind::dense: return "dense";
    case HeadKind::pruned: return "pruned";
    case HeadKind::gated_pair: return "gated-pair";
  }
  return "?";
}

HeadKind parse_head_kind(std::string_view text) {
  if (text == "dense") return HeadKind::dense;
  if (text == "pruned") return HeadKind::pruned;
  if (text == "gated-pair") return HeadKind::gated_pair;
  throw InvalidInputError("unknown head kind '" + std::string(text) + "' (expected dense, pruned or gated-pair)");
}

std::string to_string(ParamGroup group) {
  switch (group) {
    case ParamGroup::hidden_layer: return "hidden layer";
    case ParamGroup::softmax: return "softmax";
    case ParamGroup::biases: return "biases";
    case ParamGroup::other: return "other parts";
  }
  return "?";
}

void ModelConfig::validate() const {
  auto positive = [](Index v, const char* name) {
    if (v < 1) throw InvalidInputError(std::string("model config: ") + name + " must be >= 1");
  };
  if (vocab_size < 0) throw InvalidInputError("model config: vocab_size must be >= 0");
  positive(embedding_dim, "d");
  positive(lstm_units, "u");
  positive(attention_units, "d_a");
  positive(hops, "r");
  if (classes < 2) throw InvalidInputError("model config: classes must be >= 2");
  switch (head) {
    case HeadKind::dense: positive(mlp_units, "b"); break;
    case HeadKind::pruned:
      positive(row_group_units, "p");
      positive(column_group_units, "q");
      break;
    case HeadKind::gated_pair:
      positive(mlp_units, "b");
      positive(factor_units, "k");
      break;
  }
}

std::vector<ParameterSpec> parameter_specs(const ModelConfig& c) {
  c.validate();
  const Index d = c.embedding_dim;
  const Index u = c.lstm_units;
  const Index h = c.hidden_width();
  const Index r = c.hops;
  std::vector<ParameterSpec> specs{
      {"embedding", {c.vocab_size, d}, ParamGroup::other, false},
  };
  for (const char* dir : {"forward", "backward"}) {
    const std::string prefix = std::string("lstm.") + dir;
    specs.push_back({prefix + ".input", {4 * u, d}, ParamGroup::other, false});
    specs.push_back({prefix + ".recurrent", {4 * u, u}, ParamGroup::other, false});
    specs.push_back({prefix + ".bias", {4 * u}, ParamGroup::other, false});
  }
  specs.push_back({"attention.ws1", {c.attention_units, h}, ParamGroup::other, true});
  specs.push_back({"attention.ws2", {r, c.attention_units}, ParamGroup::other, true});

  auto dense_head = [&](Index inputs) {
    specs.push_back({"head.hidden", {c.mlp_units, inputs}, ParamGroup::hidden_layer, true});
    specs.push_back({"head.hidden_bias", {c.mlp_units}, ParamGroup::biases, false});
    specs.push_back({"head.output", {c.classes, c.mlp_units}, ParamGroup::softmax, true});
    specs.push_back({"head.output_bias", {c.classes}, ParamGroup::biases, false});
  };
  switch (c.head) {
    case HeadKind::dense: dense_head(r * h); break;
    case HeadKind::pruned: {
      const Index p = c.row_group_units;
      const Index q = c.column_group_units;
      specs.push_back({"head.row_groups", {r, h, p}, ParamGroup::hidden_layer, true});
      specs.push_back({"head.column_groups", {h, r, q}, ParamGroup::hidden_layer, true});
      specs.push_back({"head.output", {c.classes, r * p + h * q}, ParamGroup::softmax, true});
      specs.push_back({"head.output_bias", {c.classes}, ParamGroup::biases, false});
      break;
    }
    case HeadKind::gated_pair:
      specs.push_back({"gated.hypothesis", {r, h, c.factor_units}, ParamGroup::other, true});
      specs.push_back({"gated.premise", {r, h, c.factor_units}, ParamGroup::other, true});
      dense_head(r * c.factor_units);
      break;
  }
  return specs;
}

std::uint64_t ParameterAudit::total() const {
  std::uint64_t n = 0;
  for (const auto& row : rows) n += row.count;
  return n;
}

std::uint64_t ParameterAudit::group_total(ParamGroup group) const {
  std::uint64_t n = 0;
  for (const auto& row : rows) {
    if (row.group == group) n += row.count;
  }
  return n;
}

std::uint64_t ParameterAudit::part(std::string_view name) const {
  const auto it = std::find_if(rows.begin(), rows.end(), [&](const AuditRow& r) { return r.part == name; });
  if (it == rows.end()) throw InvalidInputError("no parameter named '" + std::string(name) + "'");
  return it->count;
}

ParameterAudit count_params(const ModelConfig& config) {
  ParameterAudit audit;
  for (const auto& spec : parameter_specs(config)) {
    audit.rows.push_back({spec.name, spec.group, static_cast<std::uint64_t>(element_count(spec.shape))});
  }
  return audit;
}

template <typename Scalar>
Model<Scalar>::Model(ModelConfig config) : config_(config), specs_(parameter_specs(config)) {
  if (config_.vocab_size < 2) throw InvalidInputError("model: vocab_size must cover PAD and UNK");
  values_.reserve(specs_.size());
  for (const auto& spec : specs_) values_.emplace_back(spec.shape);
}

template <typename Scalar>
Model<Scalar> Model<Scalar>::initialize(const ModelConfig& config, std::uint64_t seed) {
  Model model(config);
  std::mt19937_64 rng(seed);
  const Index u = config.lstm_units;
  for (std::size_t i = 0; i < model.specs_.size(); ++i) {
    const auto& spec = model.specs_[i];
    auto& value = model.values_[i];
    if (spec.name == "embedding") {
      std::uniform_real_distribution<double> dist(-0.1, 0.1);
      for (Index k = 0; k < value.size(); ++k) value[k] = static_cast<Scalar>(dist(rng));
      value.mat().row(0).setZero();
    } else if (spec.shape.size() == 1) {
      if (spec.name.starts_with("lstm.")) value.flat().segment(u, u).setOnes();
    } else if (spec.shape.size() == 2) {
      value = glorot_uniform<Scalar>(spec.shape, spec.shape[1], spec.shape[0], rng);
    } else {
      value = glorot_uniform<Scalar>(spec.shape, spec.shape[1], spec.shape[2], rng);
    }
  }
  return model;
}

template <typename Scalar>
std::size_t Model<Scalar>::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < specs_.size(); ++i) {
    if (specs_[i].name == name) return i;
  }
  throw InvalidInputError("model has no parameter '" + std::string(name) + "'");
}

template <typename Scalar>
BoundModel<Scalar> bind(Graph<Scalar>& graph, const Model<Scalar>& model, bool trainable) {
  std::vector<Var<Scalar>> params;
  for (std::size_t i = 0; i < model.size(); ++i) {
    const bool is_embedding = model.specs()[i].name == "embedding";
    const bool grad = trainable && (!is_embedding || model.config().train_embeddings);
    params.push_back(graph.leaf(model.param(i), grad));
  }
  return bind_leaves(model, std::move(params));
}

template <typename Scalar>
BoundModel<Scalar> bind_leaves(const Model<Scalar>& model, std::vector<Var<Scalar>> params) {
  if (params.size() != model.size() || params.empty()) {
    throw InvalidInputError("bind_leaves: expected " + std::to_string(model.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape() != model.specs()[i].shape) {
      throw DimensionError("bind_leaves: " + model.specs()[i].name + " has shape " + shape_string(params[i].shape()));
    }
  }
  BoundModel<Scalar> b;
  b.model = &model;
  b.graph = params.front().graph;
  b.params = std::move(params);
  auto var = [&](std::string_view name) { return b.params[model.index_of(name)]; };
  b.embedding = var("embedding");
  b.forward = {var("lstm.forward.input"), var("lstm.forward.recurrent"), var("lstm.forward.bias")};
  b.backward = {var("lstm.backward.input"), var("lstm.backward.recurrent"), var("lstm.backward.bias")};
  b.attention = {var("attention.ws1"), var("attention.ws2")};
  switch (model.config().head) {
    case HeadKind::gated_pair:
      b.gated = {var("gated.hypothesis"), var("gated.premise")};
      [[fallthrough]];
    case HeadKind::dense:
      b.mlp = {var("head.hidden"), var("head.hidden_bias"), var("head.output"), var("head.output_bias")};
      break;
    case HeadKind::pruned:
      b.pruned = {var("head.row_groups"), var("head.column_groups"), var("head.output"), var("head.output_bias")};
      break;
  }
  return b;
}

template <typename Scalar>
Encoding<Scalar> encode(const BoundModel<Scalar>& bound, const Sentence& sentence) {
  const auto words = embed(bound.embedding, sentence.tokens);
  auto hidden = bilstm(words, sentence.mask, bound.forward, bound.backward);
  const auto annotation = attend(hidden, bound.attention);
  const auto embedding = pool(annotation, hidden);
  return {std::move(hidden), annotation, embedding};
}

template <typename Scalar>
Prediction<Scalar> predict(const BoundModel<Scalar>& bound, const Sentence& sentence, DropoutSpec<Scalar> dropout) {
  Prediction<Scalar> out;
  out.encodings.push_back(encode(bound, sentence));
  const auto m = out.encodings.back().embedding;
  switch (bound.model->config().head) {
    case HeadKind::dense: out.logits = mlp_forward(m, bound.mlp, dropout); break;
    case HeadKind::pruned: out.logits = pruned_forward(m, bound.pruned, dropout); break;
    case HeadKind::gated_pair: throw InvalidInputError("gated-pair models classify sentence pairs");
  }
  return out;
}

template <typename Scalar>
Prediction<Scalar> predict_pair(const BoundModel<Scalar>& bound, const Sentence& hypothesis, const Sentence& premise,
                                DropoutSpec<Scalar> dropout) {
  if (bound.model->config().head != HeadKind::gated_pair) {
    throw InvalidInputError("sentence pairs need a gated-pair model");
  }
  Prediction<Scalar> out;
  out.encodings.push_back(encode(bound, hypothesis));
  out.encodings.push_back(encode(bound, premise));
  const auto relation = gated_encode(out.encodings[0].embedding, out.encodings[1].embedding, bound.gated);
  out.logits = mlp_forward(relation, bound.mlp, dropout);
  return out;
}

#define SELFATTN_INSTANTIATE_MODEL(S)                                                                       \
  template class Model<S>;                                                                                  \
  template BoundModel<S> bind(Graph<S>&, const Model<S>&, bool);                                            \
  template BoundModel<S> bind_leaves(const Model<S>&, std::vector<Var<S>>);                                 \
  template Encoding<S> encode(const BoundModel<S>&, const Sentence&);                                       \
  template Prediction<S> predict(const BoundModel<S>&, const Sentence&, DropoutSpec<S>);                    \
  template Prediction<S> predict_pair(const BoundModel<S>&, const Sentence&, const Sentence&, DropoutSpec<S>);

SELFATTN_INSTANTIATE_MODEL(float)
SELFATTN_INSTANTIATE_MODEL(double)

}  // namespace selfattn
