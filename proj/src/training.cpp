#include "semcom/training.hpp"

#include <algorithm>
#include <cmath>

#include "semcom/channel.hpp"
#include "semcom/rng.hpp"

namespace semcom::train {

using codec::Scheme;
using codec::SchemeModel;

namespace {

bool finite(double v) { return std::isfinite(v); }

void check_finite(double loss, const char* scheme, long long step,
                  const StepLosses& parts) {
  if (finite(loss)) return;
  throw TrainingDivergence(
      std::string("training diverged (") + scheme + ", step " +
      std::to_string(step) + "): total=" + std::to_string(loss) +
      " task=" + std::to_string(parts.task) +
      " sim_recon=" + std::to_string(parts.sim_recon) +
      " ib=" + std::to_string(parts.ib) + " vq=" + std::to_string(parts.vq));
}

std::vector<nn::ParamTensor*> main_params(SchemeModel& m) {
  std::vector<nn::ParamTensor*> ps;
  auto append = [&](nn::Sequential& net) {
    for (auto* p : net.params()) ps.push_back(p);
  };
  append(m.backbone);
  append(m.projector);
  append(m.head);
  if (m.scheme == Scheme::kIbal) append(m.logvar_head);
  if (m.scheme == Scheme::kLbvq) append(m.remapper);
  return ps;
}

void zero_main(SchemeModel& m) {
  for (auto* p : main_params(m)) p->zero_grad();
}

}  // namespace

nn::LossGrad task_loss(const codec::TaskHeadSpec& spec, const Tensor& logits,
                       const std::vector<int>& labels) {
  return spec.binary ? nn::bce_with_logits(logits, labels)
                     : nn::softmax_cross_entropy(logits, labels);
}

Trainer::Trainer(SchemeModel& model, const TrainOptions& opt)
    : model_(model), opt_(opt) {
  opt_main_ = std::make_unique<nn::Adam>(main_params(model_), opt.lr);
  if (model_.scheme == Scheme::kIbal) {
    opt_adversary_ =
        std::make_unique<nn::Adam>(model_.sim_adversary.params(), opt.lr);
  }
  if (model_.scheme == Scheme::kLbvq) {
    auto& cb = std::get<privacy::Codebook>(model_.mechanism);
    cb_param_ = nn::ParamTensor{
        "codewords",
        {static_cast<size_t>(cb.K), static_cast<size_t>(cb.seg_dim)},
        cb.codewords,
        std::vector<double>(cb.codewords.size(), 0.0)};
    opt_codebook_ = std::make_unique<nn::Adam>(
        std::vector<nn::ParamTensor*>{&cb_param_}, opt.lr);
    codeword_hits_.assign(cb.K, 0);
  }
  warmup_epochs_ = opt.lbvq_warmup_epochs >= 0 ? opt.lbvq_warmup_epochs
                                               : std::max(1, opt.epochs / 5);
}

void Trainer::add_channel_noise(Tensor& g, long long step) const {
  const size_t n = g.rows(), d = g.row_size();
  const double sigma =
      std::sqrt(channel::noise_variance(opt_.snr_train_db) / 2.0);
  for (size_t i = 0; i < n; ++i) {
    Rng rng(derive_seed({opt_.run_seed, static_cast<uint64_t>(step),
                         static_cast<uint64_t>(i), hash_str("train-awgn")}));
    double* row = g.row(i);
    for (size_t j = 0; j < d; ++j) row[j] += rng.normal(0.0, sigma);
  }
}

void Trainer::begin_epoch(int epoch, const Tensor& sample) {
  if (model_.scheme != Scheme::kLbvq) return;
  if (epoch == warmup_epochs_ && !vq_active_) {
    kmeans_init_codebook(sample);
    vq_active_ = true;
  } else if (vq_active_ && epoch > warmup_epochs_) {
    reseed_dead_codewords(sample);
  }
  std::fill(codeword_hits_.begin(), codeword_hits_.end(), 0);
}

StepLosses Trainer::step(const Tensor& images, const std::vector<int>& labels) {
  StepLosses out;
  switch (model_.scheme) {
    case Scheme::kBaseline:
    case Scheme::kDp:
    case Scheme::kEncryption:
      out = step_analog(images, labels);
      break;
    case Scheme::kIbal:
      out = ibal_train_step(model_, images, labels, *opt_main_,
                            *opt_adversary_, opt_.snr_train_db, opt_.run_seed,
                            step_);
      break;
    case Scheme::kLbvq:
      out = vq_active_ ? step_lbvq(images, labels)
                       : step_analog(images, labels);
      break;
  }
  check_finite(out.total, codec::scheme_to_string(model_.scheme).c_str(),
               step_, out);
  ++step_;
  return out;
}

// ------------------------------------------------------- analog schemes

StepLosses Trainer::step_analog(const Tensor& images,
                                const std::vector<int>& labels) {
  const size_t n = images.dim(0);
  const size_t d = static_cast<size_t>(model_.spec.d);
  zero_main(model_);

  Tensor a = model_.backbone.forward(images, true);
  Tensor feats = model_.projector.forward(a, true);
  nn::RowPowerNorm norm;
  Tensor g = norm.forward(feats, true);

  // mechanism forward on the normalized rows
  Tensor tx = g;
  std::vector<std::vector<double>> clip_inputs;  // dp backward needs them
  const bool is_dp = model_.scheme == Scheme::kDp;
  const bool is_enc = model_.scheme == Scheme::kEncryption;
  if (is_dp) {
    const auto& dp = std::get<privacy::DPConfig>(model_.mechanism);
    clip_inputs.resize(n);
    for (size_t i = 0; i < n; ++i) {
      std::vector<double> row(g.row(i), g.row(i) + d);
      clip_inputs[i] = row;
      auto clipped = privacy::clip_l1(row, dp.clip_bound);
      auto noisy = privacy::dp_perturb(
          clipped, dp,
          derive_seed({opt_.run_seed, static_cast<uint64_t>(step_),
                       static_cast<uint64_t>(i), hash_str("train-lap")}));
      std::copy(noisy.begin(), noisy.end(), tx.row(i));
    }
  } else if (is_enc) {
    const auto& key = std::get<privacy::ShuffleKey>(model_.mechanism);
    for (size_t i = 0; i < n; ++i) {
      std::vector<double> row(g.row(i), g.row(i) + d);
      const uint64_t counter =
          static_cast<uint64_t>(step_) * n + i;  // fresh permutation per block
      auto enc = privacy::shuffle_encrypt(row, key, counter);
      std::copy(enc.begin(), enc.end(), tx.row(i));
    }
  }

  add_channel_noise(tx, step_);

  // receiver inverse
  Tensor head_in = tx;
  if (is_enc) {
    const auto& key = std::get<privacy::ShuffleKey>(model_.mechanism);
    for (size_t i = 0; i < n; ++i) {
      std::vector<double> row(tx.row(i), tx.row(i) + d);
      const uint64_t counter = static_cast<uint64_t>(step_) * n + i;
      auto dec = privacy::shuffle_decrypt(row, key, counter);
      std::copy(dec.begin(), dec.end(), head_in.row(i));
    }
  }

  Tensor logits = model_.head.forward(head_in, true);
  nn::LossGrad lg = task_loss(model_.head_spec, logits, labels);

  Tensor dhead_in = model_.head.backward(lg.grad);
  // mechanism backward
  Tensor dg = dhead_in;
  if (is_enc) {
    // decrypt o encrypt is the identity on the gradient as well
    dg = dhead_in;
  } else if (is_dp) {
    const auto& dp = std::get<privacy::DPConfig>(model_.mechanism);
    for (size_t i = 0; i < n; ++i) {
      std::vector<double> grow(dhead_in.row(i), dhead_in.row(i) + d);
      auto back =
          privacy::clip_l1_backward(clip_inputs[i], dp.clip_bound, grow);
      std::copy(back.begin(), back.end(), dg.row(i));
    }
  }
  Tensor dfeats = norm.backward(dg);
  Tensor da = model_.projector.backward(dfeats);
  model_.backbone.backward(da);
  opt_main_->step();

  StepLosses out;
  out.task = lg.loss;
  out.total = lg.loss;
  return out;
}

// ----------------------------------------------------------------- IBAL

StepLosses ibal_train_step(SchemeModel& model, const Tensor& images,
                           const std::vector<int>& labels, nn::Adam& opt_main,
                           nn::Adam& opt_adversary, double snr_db,
                           uint64_t run_seed, long long step) {
  const auto& cfg = std::get<privacy::IBALConfig>(model.mechanism);
  const size_t n = images.dim(0);
  const size_t d = static_cast<size_t>(model.spec.d);
  const double sigma = std::sqrt(channel::noise_variance(snr_db) / 2.0);
  const bool sample_z = cfg.lambda_ib > 0.0;
  const bool adv_on = cfg.lambda_adv > 0.0;

  auto channel_pass = [&](Tensor& g, const char* tag) {
    for (size_t i = 0; i < n; ++i) {
      Rng rng(derive_seed({run_seed, static_cast<uint64_t>(step),
                           static_cast<uint64_t>(i), hash_str(tag)}));
      double* row = g.row(i);
      for (size_t j = 0; j < d; ++j) row[j] += rng.normal(0.0, sigma);
    }
  };

  auto sample_eta = [&](Tensor& eta) {
    for (size_t i = 0; i < n; ++i) {
      Rng rng(derive_seed({run_seed, static_cast<uint64_t>(step),
                           static_cast<uint64_t>(i), hash_str("reparam")}));
      double* row = eta.row(i);
      for (size_t j = 0; j < d; ++j) row[j] = rng.normal();
    }
  };

  // (a) simulated adversary minimizes reconstruction loss on the current
  // received features (encoder frozen).
  double adv_phase_loss = 0.0;
  if (adv_on) {
    Tensor a = model.backbone.forward(images, false);
    Tensor mu = model.projector.forward(a, false);
    Tensor z = mu;
    if (sample_z) {
      Tensor lv = model.logvar_head.forward(a, false);
      Tensor eta({n, d});
      sample_eta(eta);
      for (size_t i = 0; i < z.data.size(); ++i) {
        z.data[i] += std::exp(0.5 * lv.data[i]) * eta.data[i];
      }
    }
    nn::RowPowerNorm norm;
    Tensor g = norm.forward(z, false);
    channel_pass(g, "train-awgn");
    for (auto* p : model.sim_adversary.params()) p->zero_grad();
    Tensor recon = model.sim_adversary.forward(g, true);
    nn::LossGrad rec = nn::mse_loss(recon, images);
    adv_phase_loss = rec.loss;
    model.sim_adversary.backward(rec.grad);
    opt_adversary.step();
  }

  // (b) encoder + head update against the frozen adversary.
  zero_main(model);
  Tensor a = model.backbone.forward(images, true);
  Tensor mu = model.projector.forward(a, true);
  Tensor lv;
  Tensor eta({n, d});
  Tensor z = mu;
  if (sample_z) {
    lv = model.logvar_head.forward(a, true);
    sample_eta(eta);
    for (size_t i = 0; i < z.data.size(); ++i) {
      z.data[i] += std::exp(0.5 * lv.data[i]) * eta.data[i];
    }
  }
  nn::RowPowerNorm norm;
  Tensor g = norm.forward(z, true);
  channel_pass(g, "train-awgn");

  Tensor logits = model.head.forward(g, true);
  nn::LossGrad lg = task_loss(model.head_spec, logits, labels);

  StepLosses out;
  out.task = lg.loss;
  Tensor dg = model.head.backward(lg.grad);

  if (adv_on) {
    // one forward through the (now frozen) adversary on this phase's
    // features; its parameter grads are discarded at the next (a) phase.
    Tensor recon = model.sim_adversary.forward(g, true);
    nn::LossGrad rec = nn::mse_loss(recon, images);
    out.sim_recon = rec.loss;
    Tensor drecon = rec.grad;
    for (auto& v : drecon.data) v *= -cfg.lambda_adv;
    Tensor dg_adv = model.sim_adversary.backward(drecon);
    for (size_t i = 0; i < dg.data.size(); ++i) dg.data[i] += dg_adv.data[i];
  }

  Tensor dz = norm.backward(dg);
  Tensor dmu = dz;
  if (sample_z) {
    nn::KlGrad kl = nn::kl_unit_gaussian(mu, lv);
    out.ib = kl.loss;
    Tensor dlv(lv.shape);
    for (size_t i = 0; i < dz.data.size(); ++i) {
      dlv.data[i] = dz.data[i] * eta.data[i] * 0.5 * std::exp(0.5 * lv.data[i]) +
                    cfg.lambda_ib * kl.grad_logvar.data[i];
      dmu.data[i] += cfg.lambda_ib * kl.grad_mu.data[i];
    }
    Tensor da_lv = model.logvar_head.backward(dlv);
    Tensor da_mu = model.projector.backward(dmu);
    for (size_t i = 0; i < da_mu.data.size(); ++i) {
      da_mu.data[i] += da_lv.data[i];
    }
    model.backbone.backward(da_mu);
  } else {
    Tensor da = model.projector.backward(dmu);
    model.backbone.backward(da);
  }
  opt_main.step();

  out.total = out.task - cfg.lambda_adv * out.sim_recon + cfg.lambda_ib * out.ib;
  (void)adv_phase_loss;
  return out;
}

// ----------------------------------------------------------------- LBVQ

void Trainer::kmeans_init_codebook(const Tensor& sample) {
  auto& cb = std::get<privacy::Codebook>(model_.mechanism);
  Tensor a = model_.backbone.forward(sample, false);
  Tensor z = model_.projector.forward(a, false);
  const size_t segs = z.numel() / cb.seg_dim;
  const size_t dim = cb.seg_dim;

  Rng rng(derive_seed({opt_.run_seed, hash_str("kmeans")}));
  // init: K distinct random segments
  std::vector<size_t> pick(segs);
  for (size_t i = 0; i < segs; ++i) pick[i] = i;
  rng.shuffle(pick);
  for (int k = 0; k < cb.K; ++k) {
    std::copy_n(z.data.data() + pick[k % segs] * dim, dim,
                cb_param_.value.data() + static_cast<size_t>(k) * dim);
  }
  std::vector<int> assign(segs, 0);
  for (int iter = 0; iter < 25; ++iter) {
    for (size_t s = 0; s < segs; ++s) {
      const double* seg = z.data.data() + s * dim;
      int best = 0;
      double best_d = 0.0;
      for (int k = 0; k < cb.K; ++k) {
        const double* e = cb_param_.value.data() + static_cast<size_t>(k) * dim;
        double dist = 0.0;
        for (size_t j = 0; j < dim; ++j) {
          const double diff = seg[j] - e[j];
          dist += diff * diff;
        }
        if (k == 0 || dist < best_d) {
          best = k;
          best_d = dist;
        }
      }
      assign[s] = best;
    }
    std::vector<double> sums(cb.K * dim, 0.0);
    std::vector<long long> counts(cb.K, 0);
    for (size_t s = 0; s < segs; ++s) {
      const double* seg = z.data.data() + s * dim;
      double* acc = sums.data() + static_cast<size_t>(assign[s]) * dim;
      for (size_t j = 0; j < dim; ++j) acc[j] += seg[j];
      ++counts[assign[s]];
    }
    for (int k = 0; k < cb.K; ++k) {
      if (counts[k] == 0) {
        // empty cluster: re-seed from a random segment
        std::copy_n(z.data.data() + pick[rng.uniform_int(segs)] * dim, dim,
                    cb_param_.value.data() + static_cast<size_t>(k) * dim);
        continue;
      }
      for (size_t j = 0; j < dim; ++j) {
        cb_param_.value[static_cast<size_t>(k) * dim + j] =
            sums[static_cast<size_t>(k) * dim + j] /
            static_cast<double>(counts[k]);
      }
    }
  }
  cb.codewords = cb_param_.value;
}

void Trainer::reseed_dead_codewords(const Tensor& sample) {
  auto& cb = std::get<privacy::Codebook>(model_.mechanism);
  bool any_dead = false;
  for (int k = 0; k < cb.K; ++k) {
    if (codeword_hits_[k] == 0) {
      any_dead = true;
      break;
    }
  }
  if (!any_dead) return;
  Tensor a = model_.backbone.forward(sample, false);
  Tensor z = model_.projector.forward(a, false);
  const size_t segs = z.numel() / cb.seg_dim;
  Rng rng(derive_seed({opt_.run_seed, static_cast<uint64_t>(step_),
                       hash_str("reseed")}));
  for (int k = 0; k < cb.K; ++k) {
    if (codeword_hits_[k] != 0) continue;
    const size_t s = rng.uniform_int(segs);
    std::copy_n(z.data.data() + s * cb.seg_dim, cb.seg_dim,
                cb_param_.value.data() + static_cast<size_t>(k) * cb.seg_dim);
  }
  cb.codewords = cb_param_.value;
}

StepLosses Trainer::step_lbvq(const Tensor& images,
                              const std::vector<int>& labels) {
  auto& cb = std::get<privacy::Codebook>(model_.mechanism);
  const size_t n = images.dim(0);
  const size_t d = static_cast<size_t>(model_.spec.d);
  const int segs = static_cast<int>(d) / cb.seg_dim;
  zero_main(model_);
  cb_param_.zero_grad();

  Tensor a = model_.backbone.forward(images, true);
  Tensor z = model_.projector.forward(a, true);

  privacy::VqBatchResult vq = privacy::vq_quantize_batch(z, cb);
  for (int idx : vq.indices) ++codeword_hits_[idx];

  // digital channel per row
  Tensor q_recv({n, d});
  std::vector<uint8_t> survived(n * segs, 0);
  for (size_t i = 0; i < n; ++i) {
    std::vector<int> sent(vq.indices.begin() + i * segs,
                          vq.indices.begin() + (i + 1) * segs);
    channel::SymbolBlock mod = channel::qam_modulate(sent, cb.K);
    channel::SymbolBlock rx = channel::awgn(
        mod, opt_.snr_train_db,
        derive_seed({opt_.run_seed, static_cast<uint64_t>(step_),
                     static_cast<uint64_t>(i), hash_str("train-awgn")}));
    std::vector<int> recv = channel::qam_demodulate(rx, cb.K);
    double* out = q_recv.row(i);
    for (int s = 0; s < segs; ++s) {
      std::copy_n(cb.codeword(recv[s]), cb.seg_dim,
                  out + static_cast<size_t>(s) * cb.seg_dim);
      survived[i * segs + s] = recv[s] == sent[s] ? 1 : 0;
    }
  }

  Tensor r = model_.remapper.forward(q_recv, true);
  Tensor logits = model_.head.forward(r, true);
  nn::LossGrad lg = task_loss(model_.head_spec, logits, labels);

  privacy::VqLossResult vql = privacy::vq_loss(z, vq.quantized, vq.indices, cb);

  Tensor dr = model_.head.backward(lg.grad);
  Tensor dq_recv = model_.remapper.backward(dr);

  // straight-through onto the encoder output where the index survived the
  // channel, plus the commitment gradient
  Tensor dz = vql.grad_features;
  for (size_t i = 0; i < n; ++i) {
    for (int s = 0; s < segs; ++s) {
      if (!survived[i * segs + s]) continue;
      const size_t off = i * d + static_cast<size_t>(s) * cb.seg_dim;
      for (int j = 0; j < cb.seg_dim; ++j) {
        dz.data[off + j] += dq_recv.data[off + j];
      }
    }
  }
  Tensor da = model_.projector.backward(dz);
  model_.backbone.backward(da);

  for (size_t i = 0; i < cb_param_.grad.size(); ++i) {
    cb_param_.grad[i] = vql.grad_codewords[i];
  }
  opt_main_->step();
  opt_codebook_->step();
  cb.codewords = cb_param_.value;

  StepLosses out;
  out.task = lg.loss;
  out.vq = vql.loss;
  out.total = lg.loss + vql.loss;
  return out;
}

}  // namespace semcom::train
