#pragma once

#include "selfattn/checkpoint.hpp"
#include "selfattn/config.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace selfattn::cli {

/// Everything a training run needs, derived from one configuration.
struct TrainingSetup {
  ModelConfig model;
  TrainConfig train;
  Vocab vocab;
  Dataset train_set;
  Dataset dev_set;
  Model<float> initial;
  double embedding_coverage = -1;  // -1 when no pretrained vectors were loaded
};

/**
 * Builds the vocabulary from the training file, loads both splits, then
 * initializes a model from the configured seed, copying in pretrained
 * vectors when "embeddings" names a file.
 */
TrainingSetup prepare_training(const RunConfig& config);

/// One line per line of `path`, tokenized; blank lines are reported on `warn` and skipped.
struct InputSentence {
  std::size_t line = 0;
  TokenizedSentence tokens;
};
std::vector<InputSentence> read_sentences(const std::filesystem::path& path, bool lowercase, std::ostream& warn);

void print_audit(std::ostream& out, const ParameterAudit& audit);

/// Header "param,value,epoch,train_loss,dev_acc,mean_penalty,mean_overlap".
struct SweepCurve {
  std::string value;
  std::vector<EpochRecord> history;
};
void write_sweep_csv(std::ostream& out, const std::string& param, const std::vector<SweepCurve>& curves);

/// Trains once per value of `param` ("r" or "penalty_coeff"); run i uses seed base + i.
std::vector<SweepCurve> run_sweep(const RunConfig& base, const std::string& param,
                                  const std::vector<std::string>& values, std::ostream* log = nullptr);

/**
 * Entry point of the selfattn tool. `args` excludes the program name.
 * Results go to `out`, diagnostics to `err`; returns the process exit code.
 */
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace selfattn::cli
