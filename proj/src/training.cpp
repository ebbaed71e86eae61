#include "selfattn/training.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace selfattn {

std::string to_string(Optimizer optimizer) { return optimizer == Optimizer::sgd ? "sgd" : "adagrad"; }

Optimizer parse_optimizer(std::string_view text) {
  if (text == "sgd") return Optimizer::sgd;
  if (text == "adagrad") return Optimizer::adagrad;
  throw InvalidInputError("unknown optimizer '" + std::string(text) + "' (expected sgd or adagrad)");
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0)) throw InvalidInputError("train config: learning rate must be > 0");
  if (!(penalty_coeff >= 0)) throw InvalidInputError("train config: penalty coefficient must be >= 0");
  if (!(dropout >= 0 && dropout < 1)) throw InvalidInputError("train config: dropout must lie in [0, 1)");
  if (!(l2 >= 0)) throw InvalidInputError("train config: l2 must be >= 0");
  if (clip && !(*clip > 0)) throw InvalidInputError("train config: clip bound must be > 0");
  if (batch_size < 1) throw InvalidInputError("train config: batch size must be >= 1");
  if (max_epochs < 1) throw InvalidInputError("train config: max_epochs must be >= 1");
}

template <typename Scalar>
Var<Scalar> task_loss(Var<Scalar> logits, int label, const std::vector<Var<Scalar>>& annotations, Scalar coeff) {
  auto loss = cross_entropy(logits, label);
  if (coeff != Scalar(0)) {
    for (const auto& a : annotations) loss = add(loss, scale(penalty(a), coeff));
  }
  return loss;
}

template <typename Scalar>
Var<Scalar> l2_term(Graph<Scalar>& graph, const std::vector<Var<Scalar>>& weights, Scalar l2) {
  auto total = graph.constant(Tensor<Scalar>::scalar(0));
  if (l2 == Scalar(0)) return total;
  for (const auto& w : weights) total = add(total, frobenius_sq(w));
  return scale(total, l2);
}

template <typename Scalar>
Var<Scalar> total_loss(Var<Scalar> logits, int label, const std::vector<Var<Scalar>>& annotations, Scalar coeff,
                       Scalar l2, const std::vector<Var<Scalar>>& weights) {
  return add(task_loss(logits, label, annotations, coeff), l2_term(*logits.graph, weights, l2));
}

template <typename Scalar>
std::vector<Var<Scalar>> decayed_weights(const BoundModel<Scalar>& bound) {
  std::vector<Var<Scalar>> out;
  const auto& specs = bound.model->specs();
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (specs[i].l2) out.push_back(bound.params[i]);
  }
  return out;
}

template <typename Scalar>
void clip_gradients(std::span<Tensor<Scalar>> grads, Scalar bound) {
  for (auto& g : grads) g.flat() = g.flat().cwiseMax(-bound).cwiseMin(bound);
}

template <typename Scalar>
void sgd_step(std::span<Tensor<Scalar>> params, std::span<Tensor<Scalar>> grads, Scalar lr,
              std::optional<Scalar> clip) {
  if (params.size() != grads.size()) throw DimensionError("sgd_step: parameter/gradient count mismatch");
  if (clip) clip_gradients(grads, *clip);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].shape() != grads[i].shape()) throw DimensionError("sgd_step: gradient shape mismatch");
    params[i].flat() -= lr * grads[i].flat();
  }
}

template <typename Scalar>
void adagrad_step(std::span<Tensor<Scalar>> params, std::span<const Tensor<Scalar>> grads,
                  AdagradState<Scalar>& state, Scalar lr, Scalar eps) {
  if (params.size() != grads.size()) throw DimensionError("adagrad_step: parameter/gradient count mismatch");
  if (state.accumulators.empty()) {
    for (const auto& p : params) state.accumulators.emplace_back(p.shape());
  }
  if (state.accumulators.size() != params.size()) throw DimensionError("adagrad_step: state does not match");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& acc = state.accumulators[i].flat();
    const auto& g = grads[i].flat();
    if (acc.size() != g.size() || params[i].size() != g.size()) {
      throw DimensionError("adagrad_step: shape mismatch");
    }
    acc.array() += g.array().square();
    params[i].flat().array() -= lr * g.array() / (acc.array().sqrt() + eps);
  }
}

namespace {

template <typename Scalar>
Prediction<Scalar> predict_item(const BoundModel<Scalar>& bound, const Batch& batch, std::size_t j,
                                DropoutSpec<Scalar> dropout) {
  if (batch.second.empty()) return predict(bound, batch.first[j], dropout);
  return predict_pair(bound, batch.first[j], batch.second[j], dropout);
}

void require_nonempty(const Dataset& data, const char* what) {
  if (dataset_size(data) == 0) throw InvalidInputError(std::string(what) + ": empty dataset");
}

template <typename Scalar>
void require_task_matches(const Model<Scalar>& model, const Dataset& data) {
  const bool pair_model = model.config().head == HeadKind::gated_pair;
  if (pair_model != is_pair(data)) {
    throw InvalidInputError(pair_model ? "gated-pair model needs a sentence-pair dataset"
                                       : "single-sentence model cannot read a sentence-pair dataset");
  }
}

}  // namespace

template <typename Scalar>
Var<Scalar> batch_loss(const BoundModel<Scalar>& bound, const Batch& batch, Scalar coeff, Scalar l2,
                       DropoutSpec<Scalar> dropout) {
  if (batch.size() == 0) throw InvalidInputError("batch_loss: empty batch");
  Var<Scalar> total;
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const auto pred = predict_item(bound, batch, j, dropout);
    std::vector<Var<Scalar>> annotations;
    for (const auto& enc : pred.encodings) annotations.push_back(enc.annotation);
    const auto item = task_loss(pred.logits, batch.labels[j], annotations, coeff);
    total = j == 0 ? item : add(total, item);
  }
  return add(scale(total, Scalar(1) / static_cast<Scalar>(batch.size())),
             l2_term(*bound.graph, decayed_weights(bound), l2));
}

template <typename Scalar>
EvalStats evaluate_detailed(const Model<Scalar>& model, const Dataset& data, std::size_t batch_size) {
  require_nonempty(data, "evaluate");
  require_task_matches(model, data);
  EvalStats stats;
  std::size_t correct = 0;
  std::size_t sentences = 0;
  for (const auto& batch : make_batches(data, batch_size, nullptr)) {
    Graph<Scalar> graph;
    const auto bound = bind(graph, model, false);
    for (std::size_t j = 0; j < batch.size(); ++j) {
      const auto pred = predict_item(bound, batch, j, DropoutSpec<Scalar>{});
      Index best = 0;
      pred.logits.value().flat().maxCoeff(&best);
      if (best == batch.labels[j]) ++correct;
      for (const auto& enc : pred.encodings) {
        stats.mean_penalty += static_cast<double>(penalty(enc.annotation).value().item());
        stats.mean_overlap += static_cast<double>(mean_pairwise_overlap(enc.annotation.value()));
        ++sentences;
      }
      ++stats.count;
    }
  }
  stats.accuracy = static_cast<double>(correct) / static_cast<double>(stats.count);
  stats.mean_penalty /= static_cast<double>(sentences);
  stats.mean_overlap /= static_cast<double>(sentences);
  return stats;
}

template <typename Scalar>
double evaluate(const Model<Scalar>& model, const Dataset& data) {
  return evaluate_detailed(model, data).accuracy;
}

template <typename Scalar>
std::vector<std::pair<int, double>> predictions(const Model<Scalar>& model, const Dataset& data,
                                                std::size_t batch_size) {
  require_task_matches(model, data);
  std::vector<std::pair<int, double>> out(dataset_size(data));
  for (const auto& batch : make_batches(data, batch_size, nullptr)) {
    Graph<Scalar> graph;
    const auto bound = bind(graph, model, false);
    for (std::size_t j = 0; j < batch.size(); ++j) {
      const auto logits = predict_item(bound, batch, j, DropoutSpec<Scalar>{}).logits.value().flat();
      Index best = 0;
      const Scalar peak = logits.maxCoeff(&best);
      const double total = static_cast<double>((logits.array() - peak).exp().sum());
      out[batch.indices[j]] = {static_cast<int>(best), 1.0 / total};
    }
  }
  return out;
}

template <typename Scalar>
TrainResult<Scalar> train(Model<Scalar> model, const Dataset& train_set, const Dataset& dev_set,
                          const TrainConfig& config, std::ostream* log) {
  config.validate();
  require_nonempty(train_set, "train");
  require_nonempty(dev_set, "train (dev set)");
  require_task_matches(model, train_set);
  require_task_matches(model, dev_set);

  std::mt19937_64 rng(config.seed);
  const auto lr = static_cast<Scalar>(config.learning_rate);
  const auto coeff = static_cast<Scalar>(config.penalty_coeff);
  const auto l2 = static_cast<Scalar>(config.l2);
  std::optional<Scalar> clip;
  if (config.clip) clip = static_cast<Scalar>(*config.clip);
  const DropoutSpec<Scalar> dropout{static_cast<Scalar>(config.dropout), &rng};

  std::vector<std::size_t> trainable;
  for (std::size_t i = 0; i < model.size(); ++i) {
    if (model.specs()[i].name != "embedding" || model.config().train_embeddings) trainable.push_back(i);
  }
  AdagradState<Scalar> adagrad;

  TrainResult<Scalar> result{model, {}, 0};
  double best_accuracy = -1;
  int stale = 0;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto batches = make_batches(train_set, config.batch_size, &rng);
    double loss_sum = 0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto& batch = batches[b];
      Graph<Scalar> graph;
      const auto bound = bind(graph, model, true);
      const auto loss = batch_loss(bound, batch, coeff, l2, dropout);
      const Scalar value = loss.value().item();
      if (!std::isfinite(value)) {
        throw DivergenceError("non-finite loss in epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(b + 1));
      }
      loss_sum += static_cast<double>(value);
      graph.backward(loss);

      std::vector<Tensor<Scalar>> params;
      std::vector<Tensor<Scalar>> grads;
      for (const std::size_t i : trainable) {
        params.push_back(std::move(model.param(i)));
        grads.push_back(graph.grad(bound.params[i]));
      }
      if (config.optimizer == Optimizer::sgd) {
        sgd_step<Scalar>(params, grads, lr, clip);
      } else {
        if (clip) clip_gradients<Scalar>(grads, *clip);
        adagrad_step<Scalar>(params, grads, adagrad, lr);
      }
      for (std::size_t k = 0; k < trainable.size(); ++k) model.param(trainable[k]) = std::move(params[k]);
    }

    const auto dev = evaluate_detailed(model, dev_set);
    EpochRecord record{epoch, loss_sum / static_cast<double>(batches.size()), dev.accuracy, dev.mean_penalty,
                       dev.mean_overlap};
    result.history.push_back(record);
    if (log) {
      char line[160];
      std::snprintf(line, sizeof line, "epoch %3d  loss %.6f  dev_acc %.4f  penalty %.4f  overlap %.4f\n", epoch,
                    record.train_loss, record.dev_accuracy, record.mean_penalty, record.mean_overlap);
      *log << line;
    }
    if (dev.accuracy > best_accuracy) {
      best_accuracy = dev.accuracy;
      result.best = model;
      result.best_epoch = epoch;
      stale = 0;
    } else if (config.patience > 0 && ++stale >= config.patience) {
      break;
    }
  }
  return result;
}

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history) {
  out << "epoch,train_loss,dev_acc,mean_penalty,mean_overlap\n";
  char line[200];
  for (const auto& r : history) {
    std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.train_loss, r.dev_accuracy,
                  r.mean_penalty, r.mean_overlap);
    out << line;
  }
}

#define SELFATTN_INSTANTIATE_TRAINING(S)                                                                    \
  template Var<S> task_loss(Var<S>, int, const std::vector<Var<S>>&, S);                                    \
  template Var<S> l2_term(Graph<S>&, const std::vector<Var<S>>&, S);                                        \
  template Var<S> total_loss(Var<S>, int, const std::vector<Var<S>>&, S, S, const std::vector<Var<S>>&);    \
  template std::vector<Var<S>> decayed_weights(const BoundModel<S>&);                                       \
  template Var<S> batch_loss(const BoundModel<S>&, const Batch&, S, S, DropoutSpec<S>);                     \
  template void clip_gradients(std::span<Tensor<S>>, S);                                                    \
  template void sgd_step(std::span<Tensor<S>>, std::span<Tensor<S>>, S, std::optional<S>);                  \
  template void adagrad_step(std::span<Tensor<S>>, std::span<const Tensor<S>>, AdagradState<S>&, S, S);     \
  template double evaluate(const Model<S>&, const Dataset&);                                                \
  template EvalStats evaluate_detailed(const Model<S>&, const Dataset&, std::size_t);                       \
  template std::vector<std::pair<int, double>> predictions(const Model<S>&, const Dataset&, std::size_t);   \
  template TrainResult<S> train(Model<S>, const Dataset&, const Dataset&, const TrainConfig&, std::ostream*);

SELFATTN_INSTANTIATE_TRAINING(float)
SELFATTN_INSTANTIATE_TRAINING(double)

}  // namespace selfattn
