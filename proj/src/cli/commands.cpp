#include "selfattn/cli/commands.hpp"

#include "selfattn/cli/gradcheck_suite.hpp"
#include "selfattn/cli/heatmap.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace selfattn::cli {

namespace {

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  RunConfig config = path.empty() ? RunConfig{} : RunConfig::load(path);
  for (const auto& o : overrides) config.apply_override(o);
  return config;
}

std::string required_path(const RunConfig& config, const std::string& key, const std::string& flag) {
  if (!flag.empty()) return flag;
  const auto p = config.path(key);
  if (!p) throw ConfigError("no " + key + " given (set it in the config or pass it on the command line)");
  return *p;
}

void require_labels(const Dataset& data, Index classes, const std::string& origin) {
  auto check = [&](int label) {
    if (label >= classes) {
      throw InvalidInputError(origin + ": label " + std::to_string(label) + " is out of range for " +
                              std::to_string(classes) + " classes");
    }
  };
  std::visit([&](const auto& examples) {
    for (const auto& ex : examples) check(ex.label);
  }, data);
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  return out;
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string g9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::vector<TokenId> ids_of(const TokenizedSentence& tokens, const Vocab& vocab) { return to_ids(tokens, vocab); }

struct Options {
  std::string config;
  std::vector<std::string> overrides;
  std::string checkpoint;
  std::string data;
  std::string input;
  std::string output;
  std::string history;
  std::string mode = "per-hop";
  std::string html;
  std::string csv;
  std::string param;
  std::vector<std::string> values;
  std::uint64_t seed = 1;
};

int cmd_train(const Options& o, std::ostream& out) {
  const auto config = load_config(o.config, o.overrides);
  const auto checkpoint_path = required_path(config, "checkpoint_path", o.checkpoint);
  const auto history_path = required_path(config, "history_path", o.history);
  const auto setup = prepare_training(config);
  out << "vocabulary " << setup.vocab.size() << ", train " << dataset_size(setup.train_set) << ", dev "
      << dataset_size(setup.dev_set) << '\n';
  if (setup.embedding_coverage >= 0) out << "pretrained coverage " << fixed4(setup.embedding_coverage) << '\n';
  const auto result = train(setup.initial, setup.train_set, setup.dev_set, setup.train, &out);
  save_checkpoint(checkpoint_path, Checkpoint{result.best, setup.train, setup.vocab});
  auto history = open_output(history_path);
  write_history_csv(history, result.history);
  out << "best epoch " << result.best_epoch << ", dev accuracy "
      << fixed4(result.history[static_cast<std::size_t>(result.best_epoch - 1)].dev_accuracy) << '\n';
  out << "checkpoint " << checkpoint_path << "\nhistory " << history_path << '\n';
  return 0;
}

struct Loaded {
  Checkpoint checkpoint;
  bool lowercase = false;
};

Loaded load_for_inference(const Options& o) {
  if (o.checkpoint.empty()) throw ConfigError("--checkpoint is required");
  Loaded loaded{load_checkpoint(o.checkpoint), false};
  if (!o.config.empty() || !o.overrides.empty()) {
    const auto config = load_config(o.config, o.overrides);
    loaded.lowercase = config.get_bool("lowercase", false);
    if (config.has("d")) require_compatible(loaded.checkpoint, config.model_config());
  }
  return loaded;
}

int cmd_eval(const Options& o, std::ostream& out) {
  const auto loaded = load_for_inference(o);
  std::string path = o.data;
  if (path.empty() && !o.config.empty()) path = required_path(load_config(o.config, o.overrides), "dev_path", "");
  if (path.empty()) throw ConfigError("--data is required");
  const auto& model = loaded.checkpoint.model;
  const bool pair = model.config().head == HeadKind::gated_pair;
  const auto data = load_dataset(path, loaded.checkpoint.vocab, pair, loaded.lowercase);
  require_labels(data, model.config().classes, path);
  out << "accuracy " << fixed4(evaluate(model, data)) << '\n';
  return 0;
}

int cmd_embed(const Options& o, std::ostream& out, std::ostream& err) {
  const auto loaded = load_for_inference(o);
  if (o.input.empty()) throw ConfigError("--input is required");
  const auto sentences = read_sentences(o.input, loaded.lowercase, err);
  const auto& model = loaded.checkpoint.model;

  std::ostringstream csv;
  csv << "sentence_id,hop,values\n";
  for (const auto& s : sentences) {
    Graph<float> graph;
    const auto bound = bind(graph, model, false);
    const auto m = encode(bound, Sentence::unpadded(ids_of(s.tokens, loaded.checkpoint.vocab))).embedding.value().mat();
    for (Index i = 0; i < m.rows(); ++i) {
      csv << s.line << ',' << i;
      for (Index j = 0; j < m.cols(); ++j) csv << ',' << g9(m(i, j));
      csv << '\n';
    }
  }
  if (o.output.empty()) {
    out << csv.str();
  } else {
    open_output(o.output) << csv.str();
    out << "wrote " << sentences.size() << " embeddings to " << o.output << '\n';
  }
  return 0;
}

int cmd_visualize(const Options& o, std::ostream& out, std::ostream& err) {
  const auto loaded = load_for_inference(o);
  if (o.input.empty()) throw ConfigError("--input is required");
  const auto mode = parse_heatmap_mode(o.mode);
  const auto sentences = read_sentences(o.input, loaded.lowercase, err);
  const auto& model = loaded.checkpoint.model;
  const bool single = model.config().head != HeadKind::gated_pair;
  const std::string model_id = std::filesystem::path(o.checkpoint).stem().string();

  std::vector<HeatmapDoc> docs;
  for (const auto& s : sentences) {
    Graph<float> graph;
    const auto bound = bind(graph, model, false);
    const auto sentence = Sentence::unpadded(ids_of(s.tokens, loaded.checkpoint.vocab));
    int predicted = -1;
    double confidence = 0;
    Tensor<float> annotation;
    if (single) {
      const auto pred = predict(bound, sentence);
      const auto logits = pred.logits.value().flat();
      Index best = 0;
      const float peak = logits.maxCoeff(&best);
      predicted = static_cast<int>(best);
      confidence = 1.0 / static_cast<double>((logits.array() - peak).exp().sum());
      annotation = pred.encodings.front().annotation.value();
    } else {
      annotation = encode(bound, sentence).annotation.value();
    }
    docs.push_back(make_heatmap(model_id, s.line, s.tokens, annotation, predicted, confidence));
  }

  if (o.html.empty() && o.csv.empty()) {
    render_csv(out, docs, mode);
    return 0;
  }
  if (!o.csv.empty()) {
    auto file = open_output(o.csv);
    render_csv(file, docs, mode);
    out << "csv " << o.csv << '\n';
  }
  if (!o.html.empty()) {
    auto file = open_output(o.html);
    render_html(file, docs, mode);
    out << "html " << o.html << '\n';
  }
  return 0;
}

int cmd_params(const Options& o, std::ostream& out) {
  const auto config = load_config(o.config, o.overrides);
  print_audit(out, count_params(config.model_config()));
  return 0;
}

int cmd_gradcheck(const Options& o, std::ostream& out) {
  ModelConfig sizes = toy_gradcheck_config();
  if (!o.config.empty() || !o.overrides.empty()) {
    sizes = load_config(o.config, o.overrides).model_config();
    sizes.vocab_size = std::max<Index>(sizes.vocab_size, 12);
  }
  const auto start = std::chrono::steady_clock::now();
  const auto reports = run_checks(standard_checks(sizes, o.seed));
  const bool ok = print_reports(out, reports);
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  char line[64];
  std::snprintf(line, sizeof line, "elapsed %.2f s\n", elapsed.count());
  out << line;
  return ok ? 0 : 1;
}

int cmd_sweep(const Options& o, std::ostream& out) {
  const auto config = load_config(o.config, o.overrides);
  if (o.values.empty()) throw ConfigError("--values is required");
  const auto curves = run_sweep(config, o.param, o.values, &out);
  if (o.output.empty()) {
    write_sweep_csv(out, o.param, curves);
  } else {
    auto file = open_output(o.output);
    write_sweep_csv(file, o.param, curves);
    out << "sweep " << o.output << '\n';
  }
  return 0;
}

}  // namespace

TrainingSetup prepare_training(const RunConfig& config) {
  const auto train_path = required_path(config, "train_path", "");
  const auto dev_path = required_path(config, "dev_path", "");
  const bool lowercase = config.get_bool("lowercase", false);
  const auto min_count = config.get_int("min_count", 1);
  auto model = config.model_config();
  const bool pair = model.head == HeadKind::gated_pair;

  const auto raw_train = read_raw_examples(train_path, pair, lowercase);
  const auto raw_dev = read_raw_examples(dev_path, pair, lowercase);
  auto vocab = build_vocab(corpus_of(raw_train), static_cast<int>(min_count));
  const auto vocab_size = static_cast<Index>(vocab.size());
  if (model.vocab_size != 0 && model.vocab_size != vocab_size) {
    throw ConfigError("vocab_size = " + std::to_string(model.vocab_size) + " but the training data yields " +
                      std::to_string(vocab_size) + " entries");
  }
  model.vocab_size = vocab_size;

  TrainingSetup setup{model, config.train_config(), std::move(vocab), {}, {}, Model<float>(model), -1};
  setup.train_set = to_dataset(raw_train, setup.vocab, pair);
  setup.dev_set = to_dataset(raw_dev, setup.vocab, pair);
  require_labels(setup.train_set, model.classes, train_path);
  require_labels(setup.dev_set, model.classes, dev_path);

  setup.initial = Model<float>::initialize(model, setup.train.seed);
  if (const auto path = config.path("embeddings")) {
    std::mt19937_64 rng(setup.train.seed);
    auto table = load_pretrained(*path, setup.vocab, model.embedding_dim, rng);
    setup.initial.param("embedding") = std::move(table.table);
    setup.embedding_coverage = table.coverage;
  }
  return setup;
}

std::vector<InputSentence> read_sentences(const std::filesystem::path& path, bool lowercase, std::ostream& warn) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::vector<InputSentence> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    auto tokens = tokenize(line, lowercase);
    if (tokens.empty()) {
      warn << "warning: " << path.string() << ":" << number << ": empty sentence skipped\n";
      continue;
    }
    out.push_back({number, std::move(tokens)});
  }
  return out;
}

void print_audit(std::ostream& out, const ParameterAudit& audit) {
  char line[160];
  std::snprintf(line, sizeof line, "%-28s %-12s %14s\n", "part", "group", "count");
  out << line;
  for (const auto& row : audit.rows) {
    std::snprintf(line, sizeof line, "%-28s %-12s %14llu\n", row.part.c_str(), to_string(row.group).c_str(),
                  static_cast<unsigned long long>(row.count));
    out << line;
  }
  out << '\n';
  for (const auto group : {ParamGroup::hidden_layer, ParamGroup::softmax, ParamGroup::biases, ParamGroup::other}) {
    std::snprintf(line, sizeof line, "%-41s %14llu\n", to_string(group).c_str(),
                  static_cast<unsigned long long>(audit.group_total(group)));
    out << line;
  }
  std::snprintf(line, sizeof line, "%-41s %14llu\n", "total", static_cast<unsigned long long>(audit.total()));
  out << line;
}

void write_sweep_csv(std::ostream& out, const std::string& param, const std::vector<SweepCurve>& curves) {
  out << "param,value,epoch,train_loss,dev_acc,mean_penalty,mean_overlap\n";
  char line[200];
  for (const auto& curve : curves) {
    for (const auto& r : curve.history) {
      std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.train_loss, r.dev_accuracy,
                    r.mean_penalty, r.mean_overlap);
      out << param << ',' << curve.value << ',' << line;
    }
  }
}

std::vector<SweepCurve> run_sweep(const RunConfig& base, const std::string& param,
                                  const std::vector<std::string>& values, std::ostream* log) {
  if (param != "r" && param != "penalty_coeff") {
    throw ConfigError("sweep parameter must be r or penalty_coeff, got '" + param + "'");
  }
  const auto seed = static_cast<std::uint64_t>(base.get_int("seed", 1));
  std::vector<SweepCurve> curves;
  for (std::size_t i = 0; i < values.size(); ++i) {
    RunConfig config = base;
    config.set(param, values[i]);
    config.set("seed", std::to_string(seed + i));
    const auto setup = prepare_training(config);
    if (log) *log << "sweep " << param << " = " << values[i] << '\n';
    auto result = train(setup.initial, setup.train_set, setup.dev_set, setup.train, log);
    curves.push_back({values[i], std::move(result.history)});
  }
  return curves;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Structured self-attentive sentence embeddings", "selfattn"};
  app.require_subcommand(1);
  Options o;

  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "key = value configuration file");
    sub->add_option("--set", o.overrides, "override one config key (key=value), repeatable")
        ->expected(1)
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  };

  auto* train_cmd = app.add_subcommand("train", "train a model and write its best checkpoint and history CSV");
  add_config(train_cmd);
  train_cmd->add_option("--checkpoint", o.checkpoint, "checkpoint output (overrides checkpoint_path)");
  train_cmd->add_option("--history", o.history, "history CSV output (overrides history_path)");

  auto* eval_cmd = app.add_subcommand("eval", "print the accuracy of a checkpoint on a labelled dataset");
  add_config(eval_cmd);
  eval_cmd->add_option("--checkpoint", o.checkpoint, "checkpoint file")->required();
  eval_cmd->add_option("--data", o.data, "labelled dataset");

  auto* embed_cmd = app.add_subcommand("embed", "write the matrix embedding of every input sentence as CSV");
  add_config(embed_cmd);
  embed_cmd->add_option("--checkpoint", o.checkpoint, "checkpoint file")->required();
  embed_cmd->add_option("--input", o.input, "one sentence per line")->required();
  embed_cmd->add_option("--output", o.output, "CSV output (default: standard output)");

  auto* vis_cmd = app.add_subcommand("visualize", "render attention heatmaps as HTML and CSV");
  add_config(vis_cmd);
  vis_cmd->add_option("--checkpoint", o.checkpoint, "checkpoint file")->required();
  vis_cmd->add_option("--input", o.input, "one sentence per line")->required();
  vis_cmd->add_option("--mode", o.mode, "per-hop or overall")->capture_default_str();
  vis_cmd->add_option("--html", o.html, "HTML output");
  vis_cmd->add_option("--csv", o.csv, "CSV output");

  auto* params_cmd = app.add_subcommand("params", "print the parameter audit of a configuration");
  add_config(params_cmd);

  auto* grad_cmd = app.add_subcommand("gradcheck", "compare every gradient against finite differences");
  add_config(grad_cmd);
  grad_cmd->add_option("--seed", o.seed, "seed for inputs and weights")->capture_default_str();

  auto* sweep_cmd = app.add_subcommand("sweep", "train once per value of r or penalty_coeff");
  add_config(sweep_cmd);
  sweep_cmd->add_option("--param", o.param, "r or penalty_coeff")->required();
  sweep_cmd->add_option("--values", o.values, "comma-separated values")->delimiter(',')->required();
  sweep_cmd->add_option("--output", o.output, "CSV output (default: standard output)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (train_cmd->parsed()) return cmd_train(o, out);
    if (eval_cmd->parsed()) return cmd_eval(o, out);
    if (embed_cmd->parsed()) return cmd_embed(o, out, err);
    if (vis_cmd->parsed()) return cmd_visualize(o, out, err);
    if (params_cmd->parsed()) return cmd_params(o, out);
    if (grad_cmd->parsed()) return cmd_gradcheck(o, out);
    if (sweep_cmd->parsed()) return cmd_sweep(o, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace selfattn::cli
