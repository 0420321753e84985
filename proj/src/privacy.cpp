#include "semcom/privacy.hpp"

#include <algorithm>
#include <cmath>

#include "semcom/channel.hpp"
#include "semcom/rng.hpp"

namespace semcom::privacy {

void DPConfig::validate() const {
  if (!(epsilon > 0.0)) {
    throw ValidationError("dp: epsilon must be positive");
  }
  if (!(clip_bound > 0.0)) {
    throw ValidationError("dp: clip_bound must be positive");
  }
}

void IBALConfig::validate() const {
  if (lambda_adv < 0.0 || lambda_ib < 0.0) {
    throw ValidationError("ibal: loss weights must be non-negative");
  }
}

void Codebook::validate(size_t d) const {
  if (K < 2) throw ValidationError("codebook: K must be >= 2");
  if (seg_dim < 1) throw ValidationError("codebook: seg_dim must be >= 1");
  if (d % static_cast<size_t>(seg_dim) != 0) {
    throw ValidationError("codebook: feature dim " + std::to_string(d) +
                          " not divisible by seg_dim " +
                          std::to_string(seg_dim));
  }
  if (codewords.size() != static_cast<size_t>(K) * seg_dim) {
    throw ValidationError("codebook: codeword matrix has wrong size");
  }
  if ((K & (K - 1)) != 0) {
    throw ValidationError("codebook: K must be a power of two to map to "
                          "modulation symbols");
  }
}

int Codebook::bits_per_index() const {
  int bits = 0;
  for (int v = K; v > 1; v >>= 1) ++bits;
  return bits;
}

ShuffleKey make_shuffle_key(const std::string& hex128, size_t d) {
  if (hex128.size() != 32) {
    throw ValidationError("shuffle key: expected 32 hex chars (128 bits), got " +
                          std::to_string(hex128.size()));
  }
  auto parse64 = [&](size_t offset) {
    uint64_t v = 0;
    for (size_t i = 0; i < 16; ++i) {
      const char c = hex128[offset + i];
      int nib;
      if (c >= '0' && c <= '9') nib = c - '0';
      else if (c >= 'a' && c <= 'f') nib = c - 'a' + 10;
      else if (c >= 'A' && c <= 'F') nib = c - 'A' + 10;
      else throw ValidationError("shuffle key: non-hex character");
      v = (v << 4) | static_cast<uint64_t>(nib);
    }
    return v;
  };
  ShuffleKey key;
  key.hi = parse64(0);
  key.lo = parse64(16);
  key.d = d;
  return key;
}

std::vector<int> permutation_for(const ShuffleKey& key, uint64_t counter) {
  std::vector<int> perm(key.d);
  for (size_t i = 0; i < key.d; ++i) perm[i] = static_cast<int>(i);
  Rng rng(derive_seed({key.hi, key.lo, counter, hash_str("shuffle")}));
  rng.shuffle(perm);
  return perm;
}

std::vector<int> ShuffleKey::permutation() const {
  return permutation_for(*this, 0);
}

std::vector<double> clip_l1(const std::vector<double>& x, double bound) {
  if (!(bound > 0.0)) throw ValidationError("clip_l1: bound must be positive");
  double l1 = 0.0;
  for (double v : x) l1 += std::fabs(v);
  if (l1 <= bound) return x;
  std::vector<double> out(x.size());
  const double s = bound / l1;
  for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] * s;
  return out;
}

std::vector<double> clip_l1_backward(const std::vector<double>& x,
                                     double bound,
                                     const std::vector<double>& g) {
  double l1 = 0.0;
  for (double v : x) l1 += std::fabs(v);
  if (l1 <= bound) return g;
  // y = x * b/||x||_1; dy/dx = b/l1 * (I - x sign(x)^T / l1)
  const double s = bound / l1;
  double xg = 0.0;
  for (size_t i = 0; i < x.size(); ++i) xg += g[i] * x[i];
  std::vector<double> out(x.size());
  for (size_t i = 0; i < x.size(); ++i) {
    const double sign = x[i] > 0.0 ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0);
    out[i] = s * (g[i] - sign * xg / l1);
  }
  return out;
}

std::vector<double> dp_perturb(const std::vector<double>& x,
                               const DPConfig& cfg, uint64_t seed) {
  cfg.validate();
  const double b = cfg.laplace_scale();
  Rng rng(derive_seed({seed, hash_str("laplace")}));
  std::vector<double> out(x.size());
  for (size_t i = 0; i < x.size(); ++i) out[i] = x[i] + rng.laplace(b);
  return out;
}

std::vector<double> shuffle_encrypt(const std::vector<double>& x,
                                    const ShuffleKey& key, uint64_t counter) {
  if (x.size() != key.d) {
    throw ValidationError("shuffle_encrypt: feature length " +
                          std::to_string(x.size()) + " != key.d " +
                          std::to_string(key.d));
  }
  const auto perm = permutation_for(key, counter);
  std::vector<double> out(x.size());
  for (size_t i = 0; i < x.size(); ++i) out[i] = x[perm[i]];
  return out;
}

std::vector<double> shuffle_decrypt(const std::vector<double>& x,
                                    const ShuffleKey& key, uint64_t counter) {
  if (x.size() != key.d) {
    throw ValidationError("shuffle_decrypt: feature length " +
                          std::to_string(x.size()) + " != key.d " +
                          std::to_string(key.d));
  }
  const auto perm = permutation_for(key, counter);
  std::vector<double> out(x.size());
  for (size_t i = 0; i < x.size(); ++i) out[perm[i]] = x[i];
  return out;
}

VqResult vq_quantize(const std::vector<double>& features, const Codebook& cb) {
  cb.validate(features.size());
  const int segs = static_cast<int>(features.size()) / cb.seg_dim;
  VqResult out;
  out.indices.resize(segs);
  out.quantized.resize(features.size());
  for (int s = 0; s < segs; ++s) {
    const double* z = features.data() + static_cast<size_t>(s) * cb.seg_dim;
    int best = 0;
    double best_d = 0.0;
    for (int k = 0; k < cb.K; ++k) {
      const double* e = cb.codeword(k);
      double dist = 0.0;
      for (int j = 0; j < cb.seg_dim; ++j) {
        const double diff = z[j] - e[j];
        dist += diff * diff;
      }
      if (k == 0 || dist < best_d) {  // strict < keeps the lowest index on ties
        best = k;
        best_d = dist;
      }
    }
    out.indices[s] = best;
    std::copy_n(cb.codeword(best), cb.seg_dim,
                out.quantized.data() + static_cast<size_t>(s) * cb.seg_dim);
  }
  return out;
}

VqBatchResult vq_quantize_batch(const Tensor& features, const Codebook& cb) {
  const size_t n = features.rows(), d = features.row_size();
  cb.validate(d);
  VqBatchResult out;
  out.segments_per_row = static_cast<int>(d) / cb.seg_dim;
  out.quantized = Tensor(features.shape);
  out.indices.resize(n * out.segments_per_row);
  for (size_t i = 0; i < n; ++i) {
    std::vector<double> row(features.row(i), features.row(i) + d);
    VqResult r = vq_quantize(row, cb);
    std::copy(r.quantized.begin(), r.quantized.end(), out.quantized.row(i));
    std::copy(r.indices.begin(), r.indices.end(),
              out.indices.begin() + i * out.segments_per_row);
  }
  return out;
}

VqLossResult vq_loss(const Tensor& features, const Tensor& quantized,
                     const std::vector<int>& indices, const Codebook& cb) {
  if (features.shape != quantized.shape) {
    throw ValidationError("vq_loss: shape mismatch");
  }
  const size_t total = features.numel();
  VqLossResult out;
  out.grad_features = Tensor(features.shape);
  out.grad_codewords.assign(cb.codewords.size(), 0.0);
  double cb_term = 0.0, commit_term = 0.0;
  const double inv = 1.0 / static_cast<double>(total);
  const size_t segs_total = total / cb.seg_dim;
  for (size_t s = 0; s < segs_total; ++s) {
    const double* z = features.data.data() + s * cb.seg_dim;
    const double* e = quantized.data.data() + s * cb.seg_dim;
    const int k = indices[s];
    for (int j = 0; j < cb.seg_dim; ++j) {
      const double diff = z[j] - e[j];
      cb_term += diff * diff;
      commit_term += diff * diff;
      // d/de ||sg(z) - e||^2 = -2 (z - e)
      out.grad_codewords[static_cast<size_t>(k) * cb.seg_dim + j] +=
          -2.0 * diff * inv;
      // d/dz beta ||z - sg(e)||^2 = 2 beta (z - e)
      out.grad_features.data[s * cb.seg_dim + j] =
          2.0 * cb.commitment_beta * diff * inv;
    }
  }
  out.codebook_term = cb_term * inv;
  out.commitment_term = cb.commitment_beta * commit_term * inv;
  out.loss = out.codebook_term + out.commitment_term;
  return out;
}

TransmitBlock apply_mechanism(const std::vector<double>& features,
                              const MechanismConfig& mechanism, Mode mode,
                              uint64_t seed, uint64_t msg_counter) {
  (void)mode;  // both modes apply the same transformation per call
  TransmitBlock out;
  if (std::holds_alternative<Codebook>(mechanism)) {
    const auto& cb = std::get<Codebook>(mechanism);
    VqResult r = vq_quantize(features, cb);
    out.digital = true;
    out.indices = std::move(r.indices);
    return out;
  }
  // Analog paths share the power constraint; perturbation happens on the
  // normalized vector so the SNR impact is measurable.
  channel::SymbolBlock norm = channel::power_normalize(features);
  out.scale = norm.scale;
  std::vector<double> g = channel::real_view(norm);
  if (std::holds_alternative<NoMechanism>(mechanism) ||
      std::holds_alternative<IBALConfig>(mechanism)) {
    out.analog = std::move(g);  // IBAL protection lives in training
  } else if (std::holds_alternative<DPConfig>(mechanism)) {
    const auto& dp = std::get<DPConfig>(mechanism);
    out.analog = dp_perturb(clip_l1(g, dp.clip_bound), dp, seed);
  } else if (std::holds_alternative<ShuffleKey>(mechanism)) {
    out.analog = shuffle_encrypt(g, std::get<ShuffleKey>(mechanism),
                                 msg_counter);
  } else {
    throw ValidationError("apply_mechanism: unknown mechanism tag");
  }
  return out;
}

const char* mechanism_name(const MechanismConfig& m) {
  if (std::holds_alternative<NoMechanism>(m)) return "none";
  if (std::holds_alternative<DPConfig>(m)) return "dp";
  if (std::holds_alternative<ShuffleKey>(m)) return "encryption";
  if (std::holds_alternative<IBALConfig>(m)) return "ibal";
  return "lbvq";
}

}  // namespace semcom::privacy
