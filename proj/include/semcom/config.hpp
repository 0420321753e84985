#pragma once

// Declarative experiment configuration: a flat key = value text file,
// validated before any compute with exact line positions in error messages.
// Lists are comma-separated. '#' starts a comment. Unknown keys are errors.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "semcom/codec.hpp"

namespace semcom::harness {

struct ExperimentConfig {
  std::string scheme = "baseline";  // baseline|dp|encryption|ibal|lbvq
  std::string dataset = "cifar10";  // cifar10|celeba
  std::string dataset_root = "data";
  std::string attribute;            // face task: single attribute name
  double snr_train_db = 12.0;
  std::vector<double> snr_test_db = {4.0, 8.0, 12.0, 16.0, 20.0};
  int d = 128;
  int batch_size = 512;
  int epochs = 10;
  std::vector<uint64_t> seeds = {1, 2, 3};
  double lr = 1e-3;
  int train_subset = 0;  // 0 = full split
  int eval_subset = 0;

  // mechanism parameters
  double dp_epsilon = 0.1;
  double dp_clip = 1.0;
  std::string shuffle_key;  // 32 hex chars; empty -> derived from run seed
  double lambda_adv = 0.1;
  double lambda_ib = 0.01;
  int codebook_k = 16;
  int seg_dim = 4;
  double commitment_beta = 0.25;
  int lbvq_warmup_epochs = -1;
  int remap_hidden = 2816;

  // attacker
  int attack_pairs = 10000;
  int attack_epochs = 50;
  int attack_batch = 128;
  std::vector<double> attack_snr_db = {12.0};
  bool attack_pre_noise = false;
  int perceptual_train_images = 4096;

  // MI estimator
  int mi_pairs = 2000;
  int mi_steps = 2500;
  int mi_hidden = 256;
  int mi_batch = 256;
  double mi_lr = 5e-4;

  // profiling
  int profile_sample = 256;

  std::string source_path;  // where the config was read from

  void validate() const;
  // Effective dataset root: the config value unless SEMCOM_DATA_ROOT is set.
  std::filesystem::path resolved_data_root() const;
  // Scheme identifier used in result paths: dp gets an epsilon suffix.
  std::string scheme_id() const;
  // FNV-1a hash over the canonical effective key=value listing.
  std::string config_hash() const;
  std::string canonical_text() const;
  // Keys whose values differ from the reference experimental settings.
  std::vector<std::string> non_default_notes() const;
};

ExperimentConfig parse_config_file(const std::filesystem::path& path);
ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin);

}  // namespace semcom::harness
