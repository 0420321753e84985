#include "semcom/adversary.hpp"

#include <algorithm>
#include <cmath>

#include "semcom/metrics.hpp"
#include "semcom/rng.hpp"
#include "semcom/training.hpp"

namespace semcom::adversary {

namespace {

class SchemeVictim : public VictimQuery {
 public:
  SchemeVictim(codec::SchemeModel& model, double snr_db, uint64_t seed,
               bool pre_noise)
      : model_(model), snr_db_(snr_db), seed_(seed), pre_noise_(pre_noise) {}

  codec::TransmissionResult query(const Tensor& images,
                                  uint64_t msg_counter_base) override {
    codec::TransmissionResult res =
        codec::transmit_batch(model_, images, snr_db_, seed_, msg_counter_base);
    if (pre_noise_) {
      res.intercepted_analog = res.prenoise_analog;
      res.intercepted_indices = res.prenoise_indices;
    }
    // the tap never exposes receiver-side state
    res.head_in = Tensor();
    return res;
  }

  bool digital() const override {
    return std::holds_alternative<privacy::Codebook>(model_.mechanism);
  }
  int feature_dim() const override { return model_.spec.d; }
  int segs_per_row() const override {
    if (!digital()) return 0;
    const auto& cb = std::get<privacy::Codebook>(model_.mechanism);
    return model_.spec.d / cb.seg_dim;
  }
  int codebook_size() const override {
    if (!digital()) return 0;
    return std::get<privacy::Codebook>(model_.mechanism).K;
  }
  int image_h() const override { return model_.spec.in_h; }
  int image_w() const override { return model_.spec.in_w; }

 private:
  codec::SchemeModel& model_;
  double snr_db_;
  uint64_t seed_;
  bool pre_noise_;
};

}  // namespace

std::unique_ptr<VictimQuery> make_victim_query(codec::SchemeModel& model,
                                               double snr_db, uint64_t seed,
                                               bool pre_noise) {
  return std::make_unique<SchemeVictim>(model, snr_db, seed, pre_noise);
}

AttackerSpec attacker_spec_for(const VictimQuery& victim) {
  AttackerSpec spec;
  spec.digital_input = victim.digital();
  spec.input_dim = victim.digital()
                       ? victim.segs_per_row() * victim.codebook_size()
                       : victim.feature_dim();
  spec.out_h = victim.image_h();
  spec.out_w = victim.image_w();
  return spec;
}

Tensor one_hot_indices(const std::vector<int>& indices, size_t rows,
                       int segs_per_row, int k) {
  Tensor out({rows, static_cast<size_t>(segs_per_row) * k});
  for (size_t i = 0; i < rows; ++i) {
    double* row = out.row(i);
    for (int s = 0; s < segs_per_row; ++s) {
      const int idx = indices[i * segs_per_row + s];
      if (idx < 0 || idx >= k) {
        throw ValidationError("one_hot: index out of range");
      }
      row[static_cast<size_t>(s) * k + idx] = 1.0;
    }
  }
  return out;
}

AttackPairs collect_attack_pairs(VictimQuery& victim,
                                 const data::LabeledImageSet& dataset, int n,
                                 uint64_t seed) {
  if (n <= 0) throw ValidationError("collect_attack_pairs: n must be positive");
  if (static_cast<size_t>(n) > dataset.size()) {
    throw ValidationError("collect_attack_pairs: n exceeds dataset size");
  }
  const auto pick = data::deterministic_subset(
      dataset.size(), static_cast<size_t>(n), derive_seed({seed, hash_str("attack-pairs")}));

  AttackPairs pairs;
  pairs.originals = dataset.gather(pick);
  const size_t batch = 256;
  const bool digital = victim.digital();
  const int in_dim = digital ? victim.segs_per_row() * victim.codebook_size()
                             : victim.feature_dim();
  pairs.intercepted = Tensor({static_cast<size_t>(n), static_cast<size_t>(in_dim)});
  for (size_t start = 0; start < static_cast<size_t>(n); start += batch) {
    const size_t end = std::min(static_cast<size_t>(n), start + batch);
    Tensor imgs({end - start, pairs.originals.dim(1), pairs.originals.dim(2),
                 pairs.originals.dim(3)});
    std::copy_n(pairs.originals.row(start), imgs.numel(), imgs.data.data());
    codec::TransmissionResult res = victim.query(imgs, start);
    if (digital) {
      Tensor oh = one_hot_indices(res.intercepted_indices, end - start,
                                  victim.segs_per_row(), victim.codebook_size());
      std::copy_n(oh.data.data(), oh.numel(), pairs.intercepted.row(start));
    } else {
      std::copy_n(res.intercepted_analog.data.data(),
                  res.intercepted_analog.numel(), pairs.intercepted.row(start));
    }
  }
  return pairs;
}

PerceptualNet build_perceptual_net(const data::LabeledImageSet& corpus,
                                   int max_images, uint64_t seed) {
  const int h = corpus.height, w = corpus.width;
  const int classes = std::max(2, corpus.num_classes);
  PerceptualNet pn;
  pn.net.emplace<nn::Conv2d>(3, 16, 3, 2, 1);
  pn.net.emplace<nn::ReLU>();
  pn.net.emplace<nn::Conv2d>(16, 32, 3, 2, 1);
  pn.net.emplace<nn::ReLU>();
  pn.net.emplace<nn::Flatten>();
  pn.net.emplace<nn::Linear>(static_cast<size_t>(32 * (h / 4) * (w / 4)), 64);
  pn.net.emplace<nn::ReLU>();
  pn.feature_dim = 64;
  pn.net.init(derive_seed({seed, hash_str("perceptual")}));

  // brief supervised training, then frozen
  nn::Sequential cls_head;
  cls_head.emplace<nn::Linear>(64, static_cast<size_t>(classes));
  cls_head.init(derive_seed({seed, hash_str("perceptual-head")}));
  std::vector<nn::ParamTensor*> params = pn.net.params();
  for (auto* p : cls_head.params()) params.push_back(p);
  nn::Adam opt(params, 1e-3);

  const size_t n = std::min(static_cast<size_t>(max_images), corpus.size());
  const auto pick = data::deterministic_subset(
      corpus.size(), n, derive_seed({seed, hash_str("perceptual-subset")}));
  const int batch = 128;
  for (size_t start = 0; start < n; start += batch) {
    const size_t end = std::min(n, start + static_cast<size_t>(batch));
    std::vector<int> idx(pick.begin() + start, pick.begin() + end);
    Tensor imgs = corpus.gather(idx);
    std::vector<int> labels = corpus.gather_labels(idx);
    for (auto* p : params) p->zero_grad();
    Tensor feats = pn.net.forward(imgs, true);
    Tensor logits = cls_head.forward(feats, true);
    nn::LossGrad lg = nn::softmax_cross_entropy(logits, labels);
    Tensor dfeats = cls_head.backward(lg.grad);
    pn.net.backward(dfeats);
    opt.step();
  }
  return pn;
}

namespace {

// Mean squared distance between perceptual features, with gradient w.r.t. a.
struct PerceptualLoss {
  double loss;
  Tensor grad_a;  // gradient w.r.t. image a
};

PerceptualLoss perceptual_distance(const PerceptualNet& pn_const,
                                   const Tensor& a, const Tensor& b) {
  auto& pn = const_cast<PerceptualNet&>(pn_const);
  Tensor fb = pn.net.forward(b, false);
  Tensor fa = pn.net.forward(a, true);
  nn::LossGrad l2 = nn::mse_loss(fa, fb);
  PerceptualLoss out;
  out.loss = l2.loss;
  out.grad_a = pn.net.backward(l2.grad);
  for (auto* p : pn.net.params()) p->zero_grad();  // stays frozen
  return out;
}

}  // namespace

Attacker train_attacker(const AttackPairs& pairs, const AttackerSpec& spec,
                        const PerceptualNet& perceptual, uint64_t seed) {
  const size_t n = pairs.intercepted.rows();
  if (n == 0) throw ValidationError("train_attacker: no pairs");
  Attacker atk;
  atk.spec = spec;
  atk.decoder = codec::build_image_decoder(spec.input_dim, spec.out_h, spec.out_w);
  atk.decoder.init(derive_seed({seed, hash_str("attacker")}));

  // start from the pair-set mean: init the final conv bias to the logit of
  // the per-channel mean pixel
  {
    double mean_c[3] = {0.0, 0.0, 0.0};
    const size_t hw = static_cast<size_t>(spec.out_h) * spec.out_w;
    for (size_t i = 0; i < n; ++i) {
      const double* img = pairs.originals.row(i);
      for (int c = 0; c < 3; ++c) {
        for (size_t p = 0; p < hw; ++p) mean_c[c] += img[c * hw + p];
      }
    }
    for (int c = 0; c < 3; ++c) {
      mean_c[c] /= static_cast<double>(n) * hw;
      mean_c[c] = std::clamp(mean_c[c], 1e-3, 1.0 - 1e-3);
    }
    auto& layers = atk.decoder.layers();
    for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
      if (auto* conv = dynamic_cast<nn::Conv2d*>(it->get())) {
        for (int c = 0; c < 3; ++c) {
          conv->b_.value[c] = std::log(mean_c[c] / (1.0 - mean_c[c]));
        }
        break;
      }
    }
  }

  nn::Adam opt(atk.decoder.params(), spec.lr);
  Rng rng(derive_seed({seed, hash_str("attacker-batches")}));
  std::vector<int> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);

  for (int epoch = 0; epoch < spec.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    size_t steps = 0;
    for (size_t start = 0; start < n; start += spec.batch) {
      const size_t end = std::min(n, start + static_cast<size_t>(spec.batch));
      const size_t b = end - start;
      Tensor x({b, pairs.intercepted.row_size()});
      Tensor y({b, pairs.originals.dim(1), pairs.originals.dim(2),
                pairs.originals.dim(3)});
      for (size_t i = 0; i < b; ++i) {
        std::copy_n(pairs.intercepted.row(order[start + i]), x.row_size(),
                    x.row(i));
        std::copy_n(pairs.originals.row(order[start + i]), y.row_size(),
                    y.row(i));
      }
      atk.decoder.zero_grad();
      Tensor recon = atk.decoder.forward(x, true);
      nn::LossGrad l2 = nn::mse_loss(recon, y);
      double loss = spec.mse_weight * l2.loss;
      Tensor drecon = l2.grad;
      for (auto& v : drecon.data) v *= spec.mse_weight;
      if (spec.perceptual_weight > 0.0) {
        PerceptualLoss pl = perceptual_distance(perceptual, recon, y);
        loss += spec.perceptual_weight * pl.loss;
        for (size_t i = 0; i < drecon.data.size(); ++i) {
          drecon.data[i] += spec.perceptual_weight * pl.grad_a.data[i];
        }
      }
      if (!std::isfinite(loss)) {
        throw TrainingDivergence("attacker training diverged at epoch " +
                                 std::to_string(epoch) + ", step " +
                                 std::to_string(steps));
      }
      atk.decoder.backward(drecon);
      opt.step();
      epoch_loss += loss;
      ++steps;
    }
    atk.train_curve.push_back(epoch_loss / static_cast<double>(steps));
  }
  return atk;
}

AttackResult attack(Attacker& attacker, const Tensor& intercepted,
                    const Tensor& originals, const PerceptualNet& perceptual) {
  if (intercepted.row_size() != static_cast<size_t>(attacker.spec.input_dim)) {
    throw ValidationError("attack: interception kind does not match attacker");
  }
  AttackResult res;
  res.reconstructions = attacker.decoder.forward(intercepted);
  const size_t n = intercepted.rows();
  res.per_image_mse.resize(n);
  res.per_image_perceptual.resize(n);
  auto& pn = const_cast<PerceptualNet&>(perceptual);
  Tensor fr = pn.net.forward(res.reconstructions, false);
  Tensor fo = pn.net.forward(originals, false);
  const size_t img_elems = originals.row_size();
  double total = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double s = 0.0;
    const double* a = res.reconstructions.row(i);
    const double* b = originals.row(i);
    for (size_t j = 0; j < img_elems; ++j) {
      const double diff = a[j] - b[j];
      s += diff * diff;
    }
    res.per_image_mse[i] = s / static_cast<double>(img_elems);
    total += res.per_image_mse[i];
    double ps = 0.0;
    for (size_t j = 0; j < pn.feature_dim; ++j) {
      const double diff = fr.row(i)[j] - fo.row(i)[j];
      ps += diff * diff;
    }
    res.per_image_perceptual[i] = ps / static_cast<double>(pn.feature_dim);
  }
  res.mean_mse = total / static_cast<double>(n);
  res.mean_psnr_db = res.mean_mse == 0.0
                         ? std::numeric_limits<double>::infinity()
                         : 10.0 * std::log10(1.0 / res.mean_mse);
  return res;
}

}  // namespace semcom::adversary
