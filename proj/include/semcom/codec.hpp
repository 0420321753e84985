#pragma once

// The JSCC encoder, receiver-side task heads, and the per-scheme model
// bundle. The encoder backbone is four stride-2 convolution blocks
// (32-64-128-128) followed by a linear projection to the feature dimension.
// Scheme-specific pieces hang off SchemeModel: the IBAL log-variance head
// and simulated adversary, and the LBVQ codebook plus the receiver-side
// remapping network that de-quantizes codewords before task inference.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "semcom/nn.hpp"
#include "semcom/privacy.hpp"
#include "semcom/tensor.hpp"

namespace semcom::codec {

enum class Scheme { kBaseline, kDp, kEncryption, kIbal, kLbvq };

Scheme scheme_from_string(const std::string& s);
std::string scheme_to_string(Scheme s);

struct EncoderSpec {
  int in_c = 3;
  int in_h = 32;
  int in_w = 32;
  int d = 128;
  std::vector<size_t> widths = {32, 64, 128, 128};
  bool output_norm = true;

  void validate() const;
  size_t backbone_out_dim() const;
};

struct TaskHeadSpec {
  bool binary = false;   // binary attribute head: 1 logit, prediction = sign
  int num_classes = 10;  // ignored when binary
};

// convs + flatten; output dim = backbone_out_dim()
nn::Sequential build_backbone(const EncoderSpec& spec);
// linear backbone_out -> d
nn::Sequential build_projector(const EncoderSpec& spec);
nn::Sequential build_task_head(int d, const TaskHeadSpec& head);
// decoder from a flat input to a (3, h, w) image in [0,1]; used for the
// IBAL simulated adversary and the inversion attacker
nn::Sequential build_image_decoder(int in_dim, int out_h, int out_w);
// LBVQ receiver-side remapping MLP d -> d
nn::Sequential build_remapper(int d, int hidden);

struct SchemeModel {
  Scheme scheme = Scheme::kBaseline;
  EncoderSpec spec;
  TaskHeadSpec head_spec;
  nn::Sequential backbone;
  nn::Sequential projector;
  nn::Sequential head;
  nn::Sequential logvar_head;    // IBAL
  nn::Sequential sim_adversary;  // IBAL
  nn::Sequential remapper;       // LBVQ
  privacy::MechanismConfig mechanism;
  nlohmann::json meta;  // scheme, snr_train, seed, epochs, mechanism, ...

  // All networks that belong to the scheme (training components included),
  // for profiling and serialization.
  std::vector<std::pair<std::string, nn::Sequential*>> named_nets();
  void init_params(uint64_t seed);
};

struct BuildOptions {
  Scheme scheme = Scheme::kBaseline;
  EncoderSpec spec;
  TaskHeadSpec head;
  privacy::DPConfig dp;
  std::string shuffle_key_hex;  // encryption
  privacy::IBALConfig ibal;
  int codebook_k = 16;
  int seg_dim = 4;
  double commitment_beta = 0.25;
  int remap_hidden = 2816;
};

SchemeModel build_scheme_model(const BuildOptions& opt);

// Encoder forward: (n, c, h, w) images -> (n, d) features, power-normalized
// per row when the spec asks for it.
Tensor encode(SchemeModel& model, const Tensor& images);

// Task head forward on received features.
Tensor infer_task(SchemeModel& model, const Tensor& received);

// One deterministic pass through mechanism + channel + receiver for a batch
// of images, in eval mode. Also exposes the attacker's tap: the channel
// output (post-noise) for analog schemes, the demodulated index sequence for
// the digital scheme.
struct TransmissionResult {
  Tensor head_in;                // receiver-side features fed to the head
  Tensor intercepted_analog;     // (n, d) channel output, analog schemes
  std::vector<int> intercepted_indices;  // (n * segs), digital scheme
  Tensor prenoise_analog;        // channel input taps, for ablation
  std::vector<int> prenoise_indices;
  int segs_per_row = 0;
  bool digital = false;
};
TransmissionResult transmit_batch(SchemeModel& model, const Tensor& images,
                                  double snr_db, uint64_t seed,
                                  uint64_t msg_counter_base);

// ---------------------------------------------------------------- bundles

// Single-archive serialization: JSON metadata header plus named raw double
// arrays. Round-trips bit-exactly.
void save_bundle(const std::filesystem::path& path, SchemeModel& model);
SchemeModel load_bundle(const std::filesystem::path& path);

}  // namespace semcom::codec
