#pragma once

// Black-box model-inversion attacker. The attacker sees only the
// VictimQuery interface: attacker-chosen images in, transmissions out
// (channel output for the analog schemes, demodulated codebook indices for
// the digital scheme — the threat model grants the attacker the codebook).
// Victim parameters are never exposed across this boundary.

#include <cstdint>
#include <memory>
#include <vector>

#include "semcom/codec.hpp"
#include "semcom/dataset.hpp"
#include "semcom/nn.hpp"
#include "semcom/tensor.hpp"

namespace semcom::adversary {

class VictimQuery {
 public:
  virtual ~VictimQuery() = default;
  // Transmissions for a batch of images; msg_counter_base advances the
  // victim's message counter (encryption permutations change per message).
  virtual codec::TransmissionResult query(const Tensor& images,
                                          uint64_t msg_counter_base) = 0;
  virtual bool digital() const = 0;
  virtual int feature_dim() const = 0;
  virtual int segs_per_row() const = 0;
  virtual int codebook_size() const = 0;
  virtual int image_h() const = 0;
  virtual int image_w() const = 0;
};

// Wraps a frozen SchemeModel. pre_noise intercepts the channel input
// instead of its output (ablation knob).
std::unique_ptr<VictimQuery> make_victim_query(codec::SchemeModel& model,
                                               double snr_db, uint64_t seed,
                                               bool pre_noise = false);

struct AttackerSpec {
  bool digital_input = false;
  int input_dim = 128;  // analog: d; digital: segs_per_row * K (one-hot)
  int out_h = 32;
  int out_w = 32;
  double mse_weight = 1.0;
  double perceptual_weight = 1.0;
  int epochs = 50;
  int batch = 128;
  double lr = 1e-3;
};

AttackerSpec attacker_spec_for(const VictimQuery& victim);

struct AttackPairs {
  Tensor intercepted;  // (n, input_dim); digital interceptions one-hot coded
  Tensor originals;    // (n, c, h, w)
};

// Queries the frozen victim on n attacker-chosen images (deterministic
// choice under seed) and pairs interceptions with the originals.
AttackPairs collect_attack_pairs(VictimQuery& victim,
                                 const data::LabeledImageSet& dataset, int n,
                                 uint64_t seed);

// One-hot encoding of a digital interception batch.
Tensor one_hot_indices(const std::vector<int>& indices, size_t rows,
                       int segs_per_row, int k);

// Small fixed image network trained once on the task corpus and then
// frozen; the attacker's perception loss is the mean squared distance of
// its penultimate features.
struct PerceptualNet {
  nn::Sequential net;     // up to and including the feature layer
  size_t feature_dim = 0;
};
PerceptualNet build_perceptual_net(const data::LabeledImageSet& corpus,
                                   int max_images, uint64_t seed);

struct Attacker {
  AttackerSpec spec;
  nn::Sequential decoder;
  std::vector<double> train_curve;  // per-epoch training loss
};

// Minimizes mse_weight * MSE + perceptual_weight * perceptual distance over
// the pairs. Deterministic under seed; throws TrainingDivergence on NaN.
Attacker train_attacker(const AttackPairs& pairs, const AttackerSpec& spec,
                        const PerceptualNet& perceptual, uint64_t seed);

struct AttackResult {
  Tensor reconstructions;
  std::vector<double> per_image_mse;
  std::vector<double> per_image_perceptual;
  double mean_mse = 0.0;
  double mean_psnr_db = 0.0;  // psnr of the mean mse
  double mi_leakage_nats = 0.0;  // filled by the caller via metrics
};

AttackResult attack(Attacker& attacker, const Tensor& intercepted,
                    const Tensor& originals, const PerceptualNet& perceptual);

}  // namespace semcom::adversary
