#pragma once

#include "selfattn/data.hpp"
#include "selfattn/model.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace selfattn {

enum class Optimizer { sgd, adagrad };

std::string to_string(Optimizer optimizer);
Optimizer parse_optimizer(std::string_view text);

struct TrainConfig {
  Optimizer optimizer = Optimizer::sgd;
  double learning_rate = 0.06;
  std::size_t batch_size = 16;
  double penalty_coeff = 1.0;
  double dropout = 0.5;
  double l2 = 1e-4;
  std::optional<double> clip = 0.5;  // elementwise gradient clamp bound
  int max_epochs = 50;
  int patience = 10;                 // epochs without dev improvement before stopping
  std::uint64_t seed = 1;

  void validate() const;
};

/// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sum over `annotations` of coeff * ||A A^T - I||_F^2, plus cross-entropy.
template <typename Scalar>
Var<Scalar> task_loss(Var<Scalar> logits, int label, const std::vector<Var<Scalar>>& annotations, Scalar coeff);

/// l2 * sum ||W||^2 over the given weights.
template <typename Scalar>
Var<Scalar> l2_term(Graph<Scalar>& graph, const std::vector<Var<Scalar>>& weights, Scalar l2);

/// Cross-entropy + coeff * penalty + l2 * sum ||W||^2 for one example.
template <typename Scalar>
Var<Scalar> total_loss(Var<Scalar> logits, int label, const std::vector<Var<Scalar>>& annotations, Scalar coeff,
                       Scalar l2, const std::vector<Var<Scalar>>& weights);

/// The bound parameters that carry weight decay.
template <typename Scalar>
std::vector<Var<Scalar>> decayed_weights(const BoundModel<Scalar>& bound);

/**
 * Mean over the batch of cross-entropy + coeff * penalty (each encoded
 * sentence contributes its own penalty), plus the L2 term on decayed weights.
 */
template <typename Scalar>
Var<Scalar> batch_loss(const BoundModel<Scalar>& bound, const Batch& batch, Scalar coeff, Scalar l2,
                       DropoutSpec<Scalar> dropout = {});

/// Clamps every component to [-bound, bound].
template <typename Scalar>
void clip_gradients(std::span<Tensor<Scalar>> grads, Scalar bound);

/// p -= lr * clamp(g). `clip` absent means no clamping. Gradients are clamped in place.
template <typename Scalar>
void sgd_step(std::span<Tensor<Scalar>> params, std::span<Tensor<Scalar>> grads, Scalar lr,
              std::optional<Scalar> clip);

template <typename Scalar>
struct AdagradState {
  std::vector<Tensor<Scalar>> accumulators;
};

/// acc += g^2; p -= lr * g / (sqrt(acc) + eps).
template <typename Scalar>
void adagrad_step(std::span<Tensor<Scalar>> params, std::span<const Tensor<Scalar>> grads,
                  AdagradState<Scalar>& state, Scalar lr, Scalar eps = Scalar(1e-8));

struct EvalStats {
  double accuracy = 0;
  double mean_penalty = 0;  // per sentence
  double mean_overlap = 0;  // mean pairwise hop overlap per sentence
  std::size_t count = 0;
};

/// Argmax accuracy with dropout disabled.
template <typename Scalar>
double evaluate(const Model<Scalar>& model, const Dataset& data);

template <typename Scalar>
EvalStats evaluate_detailed(const Model<Scalar>& model, const Dataset& data, std::size_t batch_size = 32);

/// Predicted class and its softmax probability for every example, in dataset order.
template <typename Scalar>
std::vector<std::pair<int, double>> predictions(const Model<Scalar>& model, const Dataset& data,
                                                std::size_t batch_size = 32);

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0;
  double dev_accuracy = 0;
  double mean_penalty = 0;
  double mean_overlap = 0;
};

template <typename Scalar>
struct TrainResult {
  Model<Scalar> best;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
};

/**
 * Seeded epoch loop: shuffle, batch, step; evaluate on `dev` after every
 * epoch and keep the parameters with the best dev accuracy. Stops after
 * `max_epochs` or `patience` epochs without improvement.
 */
template <typename Scalar>
TrainResult<Scalar> train(Model<Scalar> model, const Dataset& train_set, const Dataset& dev_set,
                          const TrainConfig& config, std::ostream* log = nullptr);

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history);

}  // namespace selfattn
