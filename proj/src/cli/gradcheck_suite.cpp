#include "selfattn/cli/gradcheck_suite.hpp"

#include "selfattn/data.hpp"
#include "selfattn/training.hpp"

#include <cstdio>
#include <memory>
#include <ostream>
#include <random>

namespace selfattn::cli {

namespace {

using T = Tensor<double>;
using V = Var<double>;
using Inputs = std::span<const V>;

class Factory {
 public:
  explicit Factory(std::uint64_t seed) : rng_(seed) {}

  T uniform(Shape shape, double bound = 1.0) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    T t(std::move(shape));
    for (Index i = 0; i < t.size(); ++i) t[i] = dist(rng_);
    return t;
  }

  /// Entries bounded away from zero so that relu stays differentiable under perturbation.
  T signed_away_from_zero(Shape shape) {
    std::uniform_real_distribution<double> mag(0.1, 1.0);
    std::bernoulli_distribution sign(0.5);
    T t(std::move(shape));
    for (Index i = 0; i < t.size(); ++i) t[i] = sign(rng_) ? mag(rng_) : -mag(rng_);
    return t;
  }

  std::uint64_t next_seed() { return rng_(); }

 private:
  std::mt19937_64 rng_;
};

/// sum(x * w) for a fixed weight tensor of x's shape.
V weighted(V x, const T& w) { return sum(mul(x, x.graph->constant(w))); }

std::function<V(V)> weigher(Factory& f, const Shape& shape) {
  auto w = std::make_shared<T>(f.uniform(shape));
  return [w](V x) { return weighted(x, *w); };
}

Batch padded_batch(const std::vector<std::vector<TokenId>>& a, const std::vector<std::vector<TokenId>>& b,
                   std::vector<int> labels) {
  Batch batch;
  std::vector<const std::vector<TokenId>*> first;
  for (const auto& s : a) first.push_back(&s);
  batch.first = pad_batch(first);
  if (!b.empty()) {
    std::vector<const std::vector<TokenId>*> second;
    for (const auto& s : b) second.push_back(&s);
    batch.second = pad_batch(second);
  }
  for (std::size_t i = 0; i < labels.size(); ++i) batch.indices.push_back(i);
  batch.labels = std::move(labels);
  return batch;
}

NamedCheck model_check(const std::string& name, ModelConfig cfg, HeadKind head, std::uint64_t seed) {
  cfg.head = head;
  auto model = std::make_shared<Model<double>>(Model<double>::initialize(cfg, seed));
  const std::vector<std::vector<TokenId>> first{{2, 5, 7, 3, 9, 4}, {6, 2, 11, 8}};
  const std::vector<std::vector<TokenId>> second{{3, 10, 4}, {7, 5, 9, 2, 6}};
  const auto classes = static_cast<int>(cfg.classes);
  auto batch = std::make_shared<Batch>(
      padded_batch(first, head == HeadKind::gated_pair ? second : std::vector<std::vector<TokenId>>{},
                   {1 % classes, 2 % classes}));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> offset(-0.5, 0.5);
  for (std::size_t i = 0; i < model->size(); ++i) {
    if (model->specs()[i].shape.size() != 1) continue;
    auto& bias = model->param(i);
    for (Index k = 0; k < bias.size(); ++k) bias[k] += offset(rng);
  }
  std::vector<T> inputs;
  for (std::size_t i = 0; i < model->size(); ++i) inputs.push_back(model->param(i));
  ScalarFn fn = [model, batch](Graph<double>&, Inputs in) {
    const auto bound = bind_leaves(*model, std::vector<V>(in.begin(), in.end()));
    return batch_loss(bound, *batch, 1.0, 1e-4);
  };
  return {name, std::move(fn), std::move(inputs), 1e-5};
}

}  // namespace

ModelConfig toy_gradcheck_config() {
  ModelConfig cfg;
  cfg.vocab_size = 12;
  cfg.embedding_dim = 8;
  cfg.lstm_units = 8;
  cfg.attention_units = 8;
  cfg.hops = 4;
  cfg.mlp_units = 16;
  cfg.row_group_units = 4;
  cfg.column_group_units = 2;
  cfg.factor_units = 6;
  cfg.classes = 3;
  return cfg;
}

std::vector<NamedCheck> standard_checks(const ModelConfig& sizes, std::uint64_t seed) {
  sizes.validate();
  if (sizes.vocab_size < 12) throw InvalidInputError("gradcheck needs vocab_size >= 12");
  Factory f(seed);
  const Index d = sizes.embedding_dim;
  const Index u = sizes.lstm_units;
  const Index h = 2 * u;
  const Index da = sizes.attention_units;
  const Index r = sizes.hops;
  const Index n = 6;
  const Mask mask{1, 1, 1, 1, 0, 0};
  std::vector<NamedCheck> checks;

  auto unary = [&](const std::string& name, T input, std::function<V(V)> op, Shape out) {
    auto w = weigher(f, out);
    checks.push_back({name, [op, w](Graph<double>&, Inputs in) { return w(op(in[0])); }, {std::move(input)}});
  };
  auto binary = [&](const std::string& name, T a, T b, std::function<V(V, V)> op, Shape out) {
    auto w = weigher(f, out);
    checks.push_back(
        {name, [op, w](Graph<double>&, Inputs in) { return w(op(in[0], in[1])); }, {std::move(a), std::move(b)}});
  };

  binary("matmul", f.uniform({3, 4}), f.uniform({4, 2}), [](V a, V b) { return matmul(a, b); }, {3, 2});
  binary("batched_dot", f.uniform({3, 4}), f.uniform({3, 4, 2}), [](V a, V b) { return batched_dot(a, b); },
         {3, 2});
  unary("softmax_rows", f.uniform({3, 4}, 2.0), [](V x) { return softmax_rows(x); }, {3, 4});
  unary("softmax_rows(masked)", f.uniform({3, 4}, 2.0),
        [](V x) { return softmax_rows(x, Mask{1, 1, 0, 1}); }, {3, 4});
  unary("tanh", f.uniform({3, 4}, 2.0), [](V x) { return tanh(x); }, {3, 4});
  unary("sigmoid", f.uniform({3, 4}, 2.0), [](V x) { return sigmoid(x); }, {3, 4});
  unary("relu", f.signed_away_from_zero({3, 4}), [](V x) { return relu(x); }, {3, 4});
  binary("add", f.uniform({3, 4}), f.uniform({3, 4}), [](V a, V b) { return add(a, b); }, {3, 4});
  binary("sub", f.uniform({3, 4}), f.uniform({3, 4}), [](V a, V b) { return sub(a, b); }, {3, 4});
  binary("mul", f.uniform({3, 4}), f.uniform({3, 4}), [](V a, V b) { return mul(a, b); }, {3, 4});
  binary("add_bias", f.uniform({3, 4}), f.uniform({4}), [](V a, V b) { return add_bias(a, b); }, {3, 4});
  unary("scale", f.uniform({3, 4}), [](V x) { return scale(x, 0.7); }, {3, 4});
  checks.push_back({"sum", [](Graph<double>&, Inputs in) { return sum(in[0]); }, {f.uniform({3, 4})}});
  checks.push_back(
      {"frobenius_sq", [](Graph<double>&, Inputs in) { return frobenius_sq(in[0]); }, {f.uniform({3, 4})}});
  unary("transpose", f.uniform({3, 4}), [](V x) { return transpose(x); }, {4, 3});
  binary("concat_rows", f.uniform({2, 3}), f.uniform({1, 3}), [](V a, V b) { return concat_rows<double>({a, b}); },
         {3, 3});
  binary("concat_cols", f.uniform({3, 2}), f.uniform({3, 1}), [](V a, V b) { return concat_cols<double>({a, b}); },
         {3, 3});
  unary("slice_cols", f.uniform({3, 5}), [](V x) { return slice_cols(x, 1, 3); }, {3, 3});
  unary("select_row", f.uniform({3, 4}), [](V x) { return select_row(x, 1); }, {1, 4});
  unary("reshape", f.uniform({3, 4}), [](V x) { return reshape(x, {2, 6}); }, {2, 6});
  unary("gather_rows", f.uniform({5, 3}),
        [](V t) { return gather_rows(t, std::vector<TokenId>{0, 2, 2, 4}); }, {4, 3});
  unary("embed", f.uniform({5, 3}), [](V t) { return embed(t, std::vector<TokenId>{3, 1, 3}); }, {3, 3});
  {
    const auto dropout_seed = f.next_seed();
    unary("dropout", f.uniform({3, 4}),
          [dropout_seed](V x) {
            std::mt19937_64 rng(dropout_seed);
            return dropout(x, 0.5, &rng);
          },
          {3, 4});
  }
  checks.push_back({"cross_entropy",
                    [](Graph<double>&, Inputs in) { return cross_entropy(in[0], 2); },
                    {f.uniform({1, 4}, 2.0)}});
  checks.push_back({"cross_entropy(vector)",
                    [](Graph<double>&, Inputs in) { return cross_entropy(in[0], 0); },
                    {f.uniform({4}, 2.0)}});

  {
    auto wh = weigher(f, {1, u});
    auto wc = weigher(f, {1, u});
    checks.push_back({"lstm_step",
                      [wh, wc](Graph<double>&, Inputs in) {
                        const auto next = lstm_step(in[0], in[1], in[2], LstmWeights<double>{in[3], in[4], in[5]});
                        return add(wh(next.h), wc(next.c));
                      },
                      {f.uniform({1, d}), f.uniform({1, u}), f.uniform({1, u}), f.uniform({4 * u, d}, 0.5),
                       f.uniform({4 * u, u}, 0.5), f.uniform({4 * u}, 0.5)}});
  }
  {
    auto w = weigher(f, {n, h});
    checks.push_back({"bilstm",
                      [w, mask](Graph<double>&, Inputs in) {
                        const auto hs = bilstm(in[0], mask, LstmWeights<double>{in[1], in[2], in[3]},
                                               LstmWeights<double>{in[4], in[5], in[6]});
                        return w(hs.states);
                      },
                      {f.uniform({n, d}), f.uniform({4 * u, d}, 0.5), f.uniform({4 * u, u}, 0.5),
                       f.uniform({4 * u}, 0.5), f.uniform({4 * u, d}, 0.5), f.uniform({4 * u, u}, 0.5),
                       f.uniform({4 * u}, 0.5)}});
  }
  {
    T states = f.uniform({n, h});
    for (Index j = 4; j < n; ++j) states.mat().row(j).setZero();
    auto w = weigher(f, {r, n});
    checks.push_back({"attend",
                      [w, mask](Graph<double>&, Inputs in) {
                        return w(attend(HiddenStates<double>{in[0], mask}, AttentionWeights<double>{in[1], in[2]}));
                      },
                      {states, f.uniform({da, h}), f.uniform({r, da})}});
    auto wv = weigher(f, {n});
    checks.push_back({"attend_vector",
                      [wv, mask](Graph<double>&, Inputs in) {
                        return wv(attend_vector(HiddenStates<double>{in[0], mask}, in[1], in[2]));
                      },
                      {states, f.uniform({da, h}), f.uniform({da})}});
    auto wp = weigher(f, {r, h});
    checks.push_back({"pool",
                      [wp, mask](Graph<double>&, Inputs in) {
                        return wp(pool(in[0], HiddenStates<double>{in[1], mask}));
                      },
                      {f.uniform({r, n}), states}});
  }
  checks.push_back({"penalty", [](Graph<double>&, Inputs in) { return penalty(in[0]); }, {f.uniform({r, n})}});
  checks.push_back({"penalty(attend)",
                    [mask](Graph<double>&, Inputs in) {
                      return penalty(attend(HiddenStates<double>{in[0], mask}, AttentionWeights<double>{in[1], in[2]}));
                    },
                    {f.uniform({n, h}), f.uniform({da, h}), f.uniform({r, da})}});

  const Index b = sizes.mlp_units;
  const Index classes = sizes.classes;
  {
    auto w = weigher(f, {1, classes});
    checks.push_back({"mlp_forward",
                      [w](Graph<double>&, Inputs in) {
                        return w(mlp_forward(in[0], MlpWeights<double>{in[1], in[2], in[3], in[4]}));
                      },
                      {f.uniform({r, h}), f.uniform({b, r * h}, 0.3), f.uniform({b}, 0.3),
                       f.uniform({classes, b}), f.uniform({classes})}});
  }
  {
    const Index p = sizes.row_group_units;
    const Index q = sizes.column_group_units;
    auto w = weigher(f, {1, classes});
    checks.push_back({"pruned_forward",
                      [w](Graph<double>&, Inputs in) {
                        return w(pruned_forward(in[0], PrunedWeights<double>{in[1], in[2], in[3], in[4]}));
                      },
                      {f.uniform({r, h}), f.uniform({r, h, p}), f.uniform({h, r, q}),
                       f.uniform({classes, r * p + h * q}), f.uniform({classes})}});
  }
  {
    const Index k = sizes.factor_units;
    auto w = weigher(f, {r, k});
    checks.push_back({"gated_encode",
                      [w](Graph<double>&, Inputs in) {
                        return w(gated_encode(in[0], in[1], GatedWeights<double>{in[2], in[3]}));
                      },
                      {f.uniform({r, h}), f.uniform({r, h}), f.uniform({r, h, k}), f.uniform({r, h, k})}});
  }

  checks.push_back(model_check("model(dense)", sizes, HeadKind::dense, f.next_seed()));
  checks.push_back(model_check("model(pruned)", sizes, HeadKind::pruned, f.next_seed()));
  checks.push_back(model_check("model(gated-pair)", sizes, HeadKind::gated_pair, f.next_seed()));
  return checks;
}

std::vector<CheckReport> run_checks(const std::vector<NamedCheck>& checks, double tolerance) {
  std::vector<CheckReport> reports;
  for (const auto& check : checks) {
    CheckReport report{check.name, grad_check(check.fn, check.inputs, 1e-5, check.floor), check.floor, false};
    report.passed = report.result.max_relative_error < tolerance;
    reports.push_back(std::move(report));
  }
  return reports;
}

bool print_reports(std::ostream& out, const std::vector<CheckReport>& reports, double tolerance) {
  std::size_t failed = 0;
  double worst = 0;
  char line[256];
  for (const auto& r : reports) {
    if (!r.passed) ++failed;
    worst = std::max(worst, r.result.max_relative_error);
    std::snprintf(line, sizeof line, "%s  %-22s max_rel_err %.3e  floor %.0e  coords %zu", r.passed ? "PASS" : "FAIL",
                  r.name.c_str(), r.result.max_relative_error, r.floor, r.result.coordinates);
    out << line;
    if (!r.passed) {
      std::snprintf(line, sizeof line, "  (input %zu, index %lld: analytic %.9g, numeric %.9g)", r.result.worst_input,
                    static_cast<long long>(r.result.worst_coordinate), r.result.worst_analytic,
                    r.result.worst_numeric);
      out << line;
    }
    out << '\n';
  }
  std::snprintf(line, sizeof line, "%zu/%zu checks passed, worst relative error %.3e (tolerance %.0e)\n",
                reports.size() - failed, reports.size(), worst, tolerance);
  out << line;
  return failed == 0;
}

}  // namespace selfattn::cli
