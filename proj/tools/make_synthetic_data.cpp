// Generates the synthetic corpora into a dataset root. This is the stand-in
// for a dataset fetch step; the library itself never downloads anything.
//
//   make_synthetic_data --root data [--corpus cifar10|celeba|all]
//                       [--train N] [--test N] [--seed S]

#include <CLI11.hpp>
#include <cstdio>
#include <exception>

#include "semcom/datagen.hpp"

int main(int argc, char** argv) {
  CLI::App app{"synthetic corpus generator"};
  std::string root = "data";
  std::string corpus = "all";
  semcom::datagen::GenOptions opt;
  app.add_option("--root", root, "dataset root directory");
  app.add_option("--corpus", corpus, "cifar10, celeba or all");
  app.add_option("--train", opt.train_count, "train image count (0 = default)");
  app.add_option("--test", opt.test_count, "test image count (0 = default)");
  app.add_option("--seed", opt.seed, "generator seed");
  CLI11_PARSE(app, argc, argv);

  try {
    if (corpus == "all" || corpus == "cifar10") {
      std::printf("generating cifar10 corpus under %s ...\n", root.c_str());
      std::fflush(stdout);
      semcom::datagen::generate_corpus("cifar10", root, opt);
    }
    if (corpus == "all" || corpus == "celeba") {
      std::printf("generating celeba corpus under %s ...\n", root.c_str());
      std::fflush(stdout);
      semcom::datagen::generate_corpus("celeba", root, opt);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  std::printf("done\n");
  return 0;
}
