#pragma once

// The four privacy mechanisms applied to (or trained into) the feature path:
// Laplace-noise differential privacy with L1 clipping, key-guided feature
// shuffling, information-bottleneck adversarial training (IBAL, configured
// here, trained in semcom::train), and learned vector quantization with
// digital modulation (LBVQ).

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "semcom/errors.hpp"
#include "semcom/tensor.hpp"

namespace semcom::privacy {

// ------------------------------------------------------------------ types

struct DPConfig {
  double epsilon = 0.1;
  double clip_bound = 1.0;  // L1 sensitivity bound

  double laplace_scale() const { return clip_bound / epsilon; }
  void validate() const;
};

// 128-bit key. The permutation for message t is derived from (key, t) with a
// counter-mode keyed generator, so every transmitted block is shuffled by a
// fresh bijection; the legitimate receiver reproduces it from the shared key
// and the message counter.
struct ShuffleKey {
  uint64_t hi = 0;
  uint64_t lo = 0;
  size_t d = 0;

  // The counter-0 bijection, kept for tests and for key comparison.
  std::vector<int> permutation() const;
};

ShuffleKey make_shuffle_key(const std::string& hex128, size_t d);
std::vector<int> permutation_for(const ShuffleKey& key, uint64_t counter);

struct IBALConfig {
  double lambda_adv = 0.1;  // simulated-adversary distortion weight
  double lambda_ib = 0.01;  // variational rate-bound weight
  void validate() const;
};

struct Codebook {
  int K = 16;
  int seg_dim = 4;
  std::vector<double> codewords;  // K * seg_dim
  double commitment_beta = 0.25;

  void validate(size_t d) const;
  const double* codeword(int k) const { return codewords.data() + k * seg_dim; }
  int bits_per_index() const;
};

// ------------------------------------------------------------- operations

// L1 ball projection by uniform scaling: x unchanged when ||x||_1 <= bound,
// else x * bound / ||x||_1.
std::vector<double> clip_l1(const std::vector<double>& x, double bound);

// Gradient of clip_l1 applied to upstream grad g at input x.
std::vector<double> clip_l1_backward(const std::vector<double>& x,
                                     double bound,
                                     const std::vector<double>& g);

// Adds i.i.d. Laplace(0, clip_bound/epsilon) to every coordinate. The input
// must already be clipped to cfg.clip_bound for the epsilon-DP bound to hold.
std::vector<double> dp_perturb(const std::vector<double>& x,
                               const DPConfig& cfg, uint64_t seed);

std::vector<double> shuffle_encrypt(const std::vector<double>& x,
                                    const ShuffleKey& key,
                                    uint64_t counter = 0);
std::vector<double> shuffle_decrypt(const std::vector<double>& x,
                                    const ShuffleKey& key,
                                    uint64_t counter = 0);

// Nearest codeword per segment in squared Euclidean distance, ties broken by
// lowest index.
struct VqResult {
  std::vector<int> indices;       // one per segment
  std::vector<double> quantized;  // concatenated selected codewords
};
VqResult vq_quantize(const std::vector<double>& features, const Codebook& cb);

// Batched over tensor rows; indices are row-major (row, segment).
struct VqBatchResult {
  std::vector<int> indices;
  Tensor quantized;
  int segments_per_row = 0;
};
VqBatchResult vq_quantize_batch(const Tensor& features, const Codebook& cb);

// Codebook + commitment objective:
//   L = mean(||sg(z) - e||^2) + beta * mean(||z - sg(e)||^2)
// means taken per element. Gradients returned for both the features (the
// commitment term) and the codewords (the codebook term).
struct VqLossResult {
  double loss = 0.0;
  double codebook_term = 0.0;
  double commitment_term = 0.0;
  Tensor grad_features;
  std::vector<double> grad_codewords;
};
VqLossResult vq_loss(const Tensor& features, const Tensor& quantized,
                     const std::vector<int>& indices, const Codebook& cb);

// --------------------------------------------------------- mechanism union

struct NoMechanism {};

using MechanismConfig =
    std::variant<NoMechanism, DPConfig, ShuffleKey, IBALConfig, Codebook>;

enum class Mode { kTrain, kEval };

// A transmit-ready block: the analog path carries a real-valued vector that
// is already power-normalized (with the retained scale), the digital path
// carries codebook indices.
struct TransmitBlock {
  bool digital = false;
  std::vector<double> analog;
  double scale = 1.0;
  std::vector<int> indices;
};

// Dispatch per mechanism. The analog mechanisms (none / DP / shuffle / IBAL
// identity) normalize first and perturb the normalized vector; LBVQ
// quantizes the raw features to indices. `msg_counter` selects the shuffle
// permutation; `seed` drives the DP noise.
TransmitBlock apply_mechanism(const std::vector<double>& features,
                              const MechanismConfig& mechanism, Mode mode,
                              uint64_t seed, uint64_t msg_counter = 0);

const char* mechanism_name(const MechanismConfig& m);

}  // namespace semcom::privacy
