#pragma once

// End-to-end training for the five schemes. Every step backpropagates
// through the channel by sampling noise per batch. Scheme specifics:
//   baseline / dp / encryption: encoder -> power norm -> mechanism ->
//     AWGN -> receiver inverse -> head.
//   ibal: alternating update. (a) the simulated adversary minimizes its
//     reconstruction loss on the current received features; (b) encoder +
//     head minimize  L = L_task - lambda_adv * L_sim_recon + lambda_ib * R_ib
//     where R_ib is the KL of the feature posterior against a unit Gaussian
//     prior. The rate term is active only when lambda_ib > 0, in which case
//     the transmitted features are sampled with the reparameterization
//     trick; with both lambdas zero the step reduces exactly to the baseline
//     step.
//   lbvq: analog warm-up epochs, k-means codebook init from encoder
//     outputs, then straight-through training of the digital path: quantize
//     -> QAM -> AWGN -> demod -> codeword lookup -> remapper -> head. The
//     task gradient passes straight through onto the encoder output at
//     segments whose index survived the channel; the codebook trains from
//     the codebook/commitment objective; dead codewords are re-seeded from
//     encoder outputs every epoch.

#include <cstdint>
#include <memory>
#include <vector>

#include "semcom/codec.hpp"
#include "semcom/nn.hpp"
#include "semcom/tensor.hpp"

namespace semcom::train {

struct StepLosses {
  double task = 0.0;
  double sim_recon = 0.0;
  double ib = 0.0;
  double vq = 0.0;
  double total = 0.0;
};

struct TrainOptions {
  double lr = 1e-3;
  double snr_train_db = 12.0;
  uint64_t run_seed = 1;
  int epochs = 10;
  int lbvq_warmup_epochs = -1;  // -1: max(1, epochs/5)
};

class Trainer {
 public:
  Trainer(codec::SchemeModel& model, const TrainOptions& opt);

  // Call at the start of every epoch. For LBVQ this switches from the
  // analog warm-up to the digital path (initializing the codebook by
  // k-means over encoder outputs of `sample`) and re-seeds dead codewords.
  void begin_epoch(int epoch, const Tensor& sample);

  StepLosses step(const Tensor& images, const std::vector<int>& labels);

  bool digital_path_active() const { return vq_active_; }
  long long global_step() const { return step_; }

 private:
  StepLosses step_analog(const Tensor& images, const std::vector<int>& labels);
  StepLosses step_ibal(const Tensor& images, const std::vector<int>& labels);
  StepLosses step_lbvq(const Tensor& images, const std::vector<int>& labels);

  // Shared analog channel pass: y = g + noise, one seed per row.
  void add_channel_noise(Tensor& g, long long step) const;
  void kmeans_init_codebook(const Tensor& sample);
  void reseed_dead_codewords(const Tensor& sample);

  codec::SchemeModel& model_;
  TrainOptions opt_;
  std::unique_ptr<nn::Adam> opt_main_;
  std::unique_ptr<nn::Adam> opt_adversary_;
  std::unique_ptr<nn::Adam> opt_codebook_;
  nn::ParamTensor cb_param_;  // mirrors the codebook during LBVQ training
  std::vector<long long> codeword_hits_;
  long long step_ = 0;
  int warmup_epochs_ = 1;
  bool vq_active_ = false;
};

// Task loss selected by the head spec (cross-entropy or binary CE).
nn::LossGrad task_loss(const codec::TaskHeadSpec& spec, const Tensor& logits,
                       const std::vector<int>& labels);

// The spec'd alternating IBAL update as a free function (used by Trainer).
StepLosses ibal_train_step(codec::SchemeModel& model, const Tensor& images,
                           const std::vector<int>& labels, nn::Adam& opt_main,
                           nn::Adam& opt_adversary, double snr_db,
                           uint64_t run_seed, long long step);

}  // namespace semcom::train
