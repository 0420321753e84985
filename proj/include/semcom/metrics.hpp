#pragma once

// Task-performance, privacy-leakage and cost metrics.
//
// MI leakage is a Donsker-Varadhan variational lower-bound estimate between
// original and reconstructed images: both are projected to small grayscale
// patches, standardized, and a small MLP critic on quadratic-expanded
// features [x, y, x*y, x^2, y^2] is fit on a train split as a logistic
// classifier between joint and product pairs (whose optimum is the log
// density ratio); the reported number evaluates the DV bound with that
// critic on held-out pairs against sampled product-of-marginals pairs, with
// the exponential clamped at e^clip for Monte-Carlo stability. The
// projection and critic are fixed by MiEstimatorConfig so numbers are
// comparable across schemes within a run. Estimates can be slightly
// negative; they are floored at -0.05 nats.

#include <cstdint>
#include <string>
#include <vector>

#include "semcom/codec.hpp"
#include "semcom/tensor.hpp"

namespace semcom::metrics {

// Fraction of argmax matches; for binary (n,1) logits the prediction is the
// sign of the logit.
double accuracy(const Tensor& logits, const std::vector<int>& labels);

// 10*log10(1/MSE) on [0,1] images; +inf when identical.
double psnr(const Tensor& a, const Tensor& b);

double mse(const Tensor& a, const Tensor& b);

struct MiEstimatorConfig {
  int proj_hw = 16;        // grayscale projection size (per image)
  int hidden = 256;
  int steps = 2500;
  int batch = 256;
  double lr = 5e-4;
  double clip = 15.0;      // critic output clamp inside the DV exponential
  double train_frac = 0.7;
  int min_pairs = 1000;
  size_t eval_product_samples = 300000;
};

// Variational lower-bound MI estimate in nats between paired image sets
// (n,c,h,w); deterministic under seed.
double mi_leakage(const Tensor& originals, const Tensor& reconstructions,
                  const MiEstimatorConfig& cfg, uint64_t seed);

// Raw-vector variant used for estimator calibration: rows are treated as
// already-projected observations.
double mi_leakage_vectors(const Tensor& x, const Tensor& y,
                          const MiEstimatorConfig& cfg, uint64_t seed);

// ------------------------------------------------------------------ cost

struct ProfileResult {
  long long flops = 0;   // analytic forward flops per input image, all nets
  long long params = 0;  // trainable parameters incl. codebook
  double epoch_seconds = 0.0;
  double inference_seconds = 0.0;
  std::string hardware;
};

// Analytic counts are deterministic; the timing fields are measured (median
// of 5 after 1 warm-up) on a scratch clone of the model and tagged with a
// hardware descriptor. epoch_seconds times one training pass over `sample`
// at the given batch size; inference_seconds times one single-image
// transmit + task inference.
ProfileResult profile(codec::SchemeModel& model, const Tensor& sample,
                      int batch_size, double snr_db = 12.0);

// Analytic-only part (no timing, no clone).
void profile_analytic(codec::SchemeModel& model, long long* flops,
                      long long* params);

std::string hardware_descriptor();

}  // namespace semcom::metrics
