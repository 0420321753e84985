// Command-line interface for the benchmark harness.
//
//   semcom train  --config <file> --out <dir> [--seed <n>]
//   semcom eval   --config <file> --out <dir> [--seed <n>]
//   semcom attack --config <file> --out <dir> [--seed <n>]
//   semcom report --out <dir>
//
// Without --seed the subcommand runs every seed in the config. Exit code 0
// only on full success.

#include <CLI11.hpp>
#include <cstdio>
#include <exception>

#include "semcom/harness.hpp"

namespace {

struct CommonArgs {
  std::string config;
  std::string out;
  long long seed = -1;
};

std::vector<uint64_t> seeds_for(const semcom::harness::ExperimentConfig& cfg,
                                long long seed) {
  if (seed >= 0) return {static_cast<uint64_t>(seed)};
  return cfg.seeds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"privacy-preserving task-oriented semantic communication "
               "benchmark"};
  app.require_subcommand(1);

  CommonArgs train_args, eval_args, attack_args;
  std::string report_out;

  auto add_common = [](CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config, "experiment config file")
        ->required();
    cmd->add_option("--out", args.out, "output directory")->required();
    cmd->add_option("--seed", args.seed, "run a single seed");
  };

  CLI::App* train = app.add_subcommand("train", "train one scheme");
  add_common(train, train_args);
  CLI::App* eval = app.add_subcommand("eval", "evaluate over the SNR sweep");
  add_common(eval, eval_args);
  CLI::App* attack = app.add_subcommand("attack", "run the inversion attack");
  add_common(attack, attack_args);
  CLI::App* report = app.add_subcommand("report", "emit plots and tables");
  report->add_option("--out", report_out, "results directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      const auto cfg = semcom::harness::parse_config_file(train_args.config);
      for (uint64_t s : seeds_for(cfg, train_args.seed)) {
        std::printf("[train] %s seed %llu\n", cfg.scheme_id().c_str(),
                    static_cast<unsigned long long>(s));
        std::fflush(stdout);
        semcom::harness::run_train(cfg, train_args.out, s);
      }
    } else if (eval->parsed()) {
      const auto cfg = semcom::harness::parse_config_file(eval_args.config);
      for (uint64_t s : seeds_for(cfg, eval_args.seed)) {
        std::printf("[eval] %s seed %llu\n", cfg.scheme_id().c_str(),
                    static_cast<unsigned long long>(s));
        std::fflush(stdout);
        semcom::harness::run_eval(cfg, eval_args.out, s);
      }
    } else if (attack->parsed()) {
      const auto cfg = semcom::harness::parse_config_file(attack_args.config);
      for (uint64_t s : seeds_for(cfg, attack_args.seed)) {
        std::printf("[attack] %s seed %llu\n", cfg.scheme_id().c_str(),
                    static_cast<unsigned long long>(s));
        std::fflush(stdout);
        semcom::harness::run_attack(cfg, attack_args.out, s);
      }
    } else if (report->parsed()) {
      semcom::harness::emit_report(report_out);
      std::printf("[report] written to %s/report\n", report_out.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
