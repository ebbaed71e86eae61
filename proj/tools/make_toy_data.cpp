#include "selfattn/synthetic.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Generate a keyword-spotting toy dataset", "make_toy_data"};
  selfattn::KeywordTaskSpec spec;
  std::string train_path = "toy_train.tsv";
  std::string dev_path = "toy_dev.tsv";
  app.add_option("--train", train_path, "training split output")->capture_default_str();
  app.add_option("--dev", dev_path, "dev split output")->capture_default_str();
  app.add_option("--classes", spec.classes)->capture_default_str();
  app.add_option("--train-size", spec.train_size)->capture_default_str();
  app.add_option("--dev-size", spec.dev_size)->capture_default_str();
  app.add_option("--vocab", spec.vocab_size, "filler plus keyword types")->capture_default_str();
  app.add_option("--keywords-per-class", spec.keywords_per_class)->capture_default_str();
  app.add_option("--keywords-per-sentence", spec.keywords_per_sentence)->capture_default_str();
  app.add_option("--min-length", spec.min_length)->capture_default_str();
  app.add_option("--max-length", spec.max_length)->capture_default_str();
  app.add_option("--seed", spec.seed)->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    const auto task = selfattn::make_keyword_task(spec);
    std::ofstream train(train_path);
    std::ofstream dev(dev_path);
    if (!train || !dev) {
      std::cerr << "error: cannot write output files\n";
      return 1;
    }
    selfattn::write_examples(train, task.train);
    selfattn::write_examples(dev, task.dev);
    std::cout << task.train.size() << " train and " << task.dev.size() << " dev sentences\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
