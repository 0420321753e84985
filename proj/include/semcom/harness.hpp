#pragma once

// Config-driven experiment runner behind the CLI: trains schemes, sweeps
// SNR, runs inversion attacks, and emits the report artifacts.
//
// Results layout under the output root:
//   <out>/<scheme_id>/<seed>/bundle        model archive
//   <out>/<scheme_id>/<seed>/train.log     run header + per-epoch losses
//   <out>/<scheme_id>/<seed>/metrics.csv   one row per (snr_test); attack/MI
//                                          columns filled by run_attack
//   <out>/<scheme_id>/<seed>/profile.csv   analytic counts + measured timing
//   <out>/<scheme_id>/<seed>/grids/        reconstruction grids per SNR
//   <out>/report/                          plots and tables
//
// metrics.csv contains only deterministic fields; wall-clock timing lives in
// profile.csv so identical (config, seed) reruns reproduce metrics.csv
// bit-identically.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "semcom/config.hpp"

namespace semcom::harness {

// metrics.csv column order (fixed):
//   config_hash,scheme,dataset,snr_db,seed,accuracy,mi_leakage_nats,
//   attacker_mse,attacker_psnr_db,flops,params,preprocess
extern const char* kMetricsHeader;

struct MetricsRecord {
  std::string config_hash;
  std::string scheme;
  std::string dataset;
  double snr_db = 0.0;
  uint64_t seed = 0;
  double accuracy = 0.0;
  double mi_leakage_nats = std::numeric_limits<double>::quiet_NaN();
  double attacker_mse = std::numeric_limits<double>::quiet_NaN();
  double attacker_psnr_db = std::numeric_limits<double>::quiet_NaN();
  long long flops = 0;
  long long params = 0;
  std::string preprocess;

  std::string to_csv_row() const;
};

std::filesystem::path run_dir(const std::filesystem::path& out,
                              const ExperimentConfig& cfg, uint64_t seed);

// Trains one (config, seed) end to end and writes bundle + train.log.
// Returns the bundle path.
std::filesystem::path run_train(const ExperimentConfig& cfg,
                                const std::filesystem::path& out,
                                uint64_t seed);

// Evaluates the trained bundle over the SNR sweep; writes metrics.csv and
// profile.csv. Requires run_train to have completed.
void run_eval(const ExperimentConfig& cfg, const std::filesystem::path& out,
              uint64_t seed);

// Trains the inversion attacker per attack SNR, fills the attack columns of
// metrics.csv and writes reconstruction grids. Requires run_eval.
void run_attack(const ExperimentConfig& cfg, const std::filesystem::path& out,
                uint64_t seed);

// Aggregates every metrics.csv under the output root into plots and tables
// under <out>/report. Pure reader; regenerating from unchanged CSVs is
// byte-identical.
void emit_report(const std::filesystem::path& out);

// Convenience: run train+eval(+attack) for every seed in the config.
void run_all(const ExperimentConfig& cfg, const std::filesystem::path& out,
             bool with_attack);

std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& file);

}  // namespace semcom::harness
