#include "semcom/metrics.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "semcom/nn.hpp"
#include "semcom/rng.hpp"
#include "semcom/training.hpp"

namespace semcom::metrics {

double accuracy(const Tensor& logits, const std::vector<int>& labels) {
  const size_t n = logits.rows();
  if (n == 0) throw ValidationError("accuracy: empty input");
  if (labels.size() != n) throw ValidationError("accuracy: length mismatch");
  size_t hits = 0;
  if (logits.row_size() == 1) {
    for (size_t i = 0; i < n; ++i) {
      const int pred = logits.data[i] > 0.0 ? 1 : 0;
      if (pred == labels[i]) ++hits;
    }
  } else {
    const auto preds = nn::argmax_rows(logits);
    for (size_t i = 0; i < n; ++i) {
      if (preds[i] == labels[i]) ++hits;
    }
  }
  return static_cast<double>(hits) / static_cast<double>(n);
}

double mse(const Tensor& a, const Tensor& b) {
  if (a.shape != b.shape) throw ValidationError("mse: shape mismatch");
  double total = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    total += d * d;
  }
  return total / static_cast<double>(a.data.size());
}

double psnr(const Tensor& a, const Tensor& b) {
  const double m = mse(a, b);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / m);
}

// ------------------------------------------------------------ MI estimator

namespace {

// Grayscale + area-average resize of an (n,c,h,w) batch to (n, hw*hw).
Tensor project_gray(const Tensor& images, int hw) {
  const size_t n = images.dim(0), c = images.dim(1), h = images.dim(2),
               w = images.dim(3);
  Tensor out({n, static_cast<size_t>(hw) * hw});
  for (size_t i = 0; i < n; ++i) {
    const double* img = images.row(i);
    double* dst = out.row(i);
    for (int oy = 0; oy < hw; ++oy) {
      const size_t y0 = oy * h / hw, y1 = std::max(y0 + 1, (oy + 1) * h / hw);
      for (int ox = 0; ox < hw; ++ox) {
        const size_t x0 = ox * w / hw,
                     x1 = std::max(x0 + 1, (ox + 1) * w / hw);
        double acc = 0.0;
        for (size_t ch = 0; ch < c; ++ch) {
          for (size_t y = y0; y < y1; ++y) {
            for (size_t x = x0; x < x1; ++x) {
              acc += img[(ch * h + y) * w + x];
            }
          }
        }
        dst[oy * hw + ox] =
            acc / (static_cast<double>(c) * (y1 - y0) * (x1 - x0));
      }
    }
  }
  return out;
}

// Builds the critic input [x, y, x*y, x^2, y^2] for a batch of index pairs.
// The quadratic expansion makes the optimal critic for jointly Gaussian
// pairs linearly representable, which is what the calibration oracle needs;
// the MLP on top handles everything non-Gaussian.
Tensor critic_input(const Tensor& x, const Tensor& y,
                    const std::vector<std::pair<int, int>>& pairs) {
  const size_t d = x.row_size();
  Tensor out({pairs.size(), 5 * d});
  for (size_t i = 0; i < pairs.size(); ++i) {
    const double* xr = x.row(pairs[i].first);
    const double* yr = y.row(pairs[i].second);
    double* dst = out.row(i);
    for (size_t j = 0; j < d; ++j) {
      dst[j] = xr[j];
      dst[d + j] = yr[j];
      dst[2 * d + j] = xr[j] * yr[j];
      dst[3 * d + j] = xr[j] * xr[j];
      dst[4 * d + j] = yr[j] * yr[j];
    }
  }
  return out;
}

// Donsker-Varadhan evaluation of a trained critic on held-out pairs. The
// exponential in the product-of-marginals term is clamped at e^clip to keep
// its Monte-Carlo estimate stable (the clamp only touches a tail whose
// probability under the product measure is about e^-clip).
double dv_estimate(nn::Sequential& critic, const Tensor& x, const Tensor& y,
                   const std::vector<int>& held_idx, double clip,
                   size_t product_samples, Rng& rng) {
  // joint term over all held-out pairs
  std::vector<std::pair<int, int>> joint;
  joint.reserve(held_idx.size());
  for (int i : held_idx) joint.emplace_back(i, i);
  Tensor tj = critic.forward(critic_input(x, y, joint));
  double ep = 0.0;
  for (double v : tj.data) ep += v;
  ep /= static_cast<double>(tj.data.size());

  // product-of-marginals term over sampled cross pairs
  double sum_exp = 0.0;
  size_t count = 0;
  const size_t chunk = 4096;
  while (count < product_samples) {
    const size_t take = std::min(chunk, product_samples - count);
    std::vector<std::pair<int, int>> cross(take);
    for (auto& pr : cross) {
      const int a = held_idx[rng.uniform_int(held_idx.size())];
      int b = held_idx[rng.uniform_int(held_idx.size())];
      while (b == a && held_idx.size() > 1) {
        b = held_idx[rng.uniform_int(held_idx.size())];
      }
      pr = {a, b};
    }
    Tensor tm = critic.forward(critic_input(x, y, cross));
    for (double v : tm.data) sum_exp += std::exp(std::min(v, clip));
    count += take;
  }
  const double log_eq = std::log(sum_exp / static_cast<double>(count));
  return ep - log_eq;
}

double mi_core(Tensor x, Tensor y, const MiEstimatorConfig& cfg,
               uint64_t seed) {
  const size_t n = x.rows();
  if (n != y.rows()) throw ValidationError("mi: pair count mismatch");
  if (n < static_cast<size_t>(cfg.min_pairs)) {
    throw ValidationError("mi: need at least " + std::to_string(cfg.min_pairs) +
                          " pairs, got " + std::to_string(n));
  }
  const size_t d = x.row_size();

  // train/held-out split
  std::vector<int> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
  Rng rng(derive_seed({seed, hash_str("mi-estimator")}));
  rng.shuffle(order);
  const size_t n_train = static_cast<size_t>(cfg.train_frac * n);
  std::vector<int> train_idx(order.begin(), order.begin() + n_train);
  std::vector<int> held_idx(order.begin() + n_train, order.end());

  // in-place standardization over the full arrays using train stats
  auto standardize_by = [&](Tensor& t) {
    std::vector<double> mean(d, 0.0), sd(d, 0.0);
    for (int i : train_idx) {
      const double* row = t.row(i);
      for (size_t j = 0; j < d; ++j) mean[j] += row[j];
    }
    for (size_t j = 0; j < d; ++j) mean[j] /= static_cast<double>(train_idx.size());
    for (int i : train_idx) {
      const double* row = t.row(i);
      for (size_t j = 0; j < d; ++j) {
        const double diff = row[j] - mean[j];
        sd[j] += diff * diff;
      }
    }
    for (size_t j = 0; j < d; ++j) {
      sd[j] = std::sqrt(sd[j] / static_cast<double>(train_idx.size()) + 1e-8);
    }
    for (size_t i = 0; i < t.rows(); ++i) {
      double* row = t.row(i);
      for (size_t j = 0; j < d; ++j) row[j] = (row[j] - mean[j]) / sd[j];
    }
  };
  standardize_by(x);
  standardize_by(y);

  nn::Sequential critic;
  critic.emplace<nn::Linear>(5 * d, static_cast<size_t>(cfg.hidden));
  critic.emplace<nn::Elu>();
  critic.emplace<nn::Linear>(static_cast<size_t>(cfg.hidden),
                             static_cast<size_t>(cfg.hidden));
  critic.emplace<nn::Elu>();
  critic.emplace<nn::Linear>(static_cast<size_t>(cfg.hidden), 1);
  critic.init(derive_seed({seed, hash_str("mi-critic")}));
  nn::Adam opt(critic.params(), cfg.lr, 0.9, 0.999, 1e-8,
               /*weight_decay=*/1e-4);

  // The critic trains as a logistic classifier between joint and product
  // pairs (bounded gradients; its optimum is the exact log density ratio),
  // and the MI estimate evaluates the Donsker-Varadhan bound with the
  // trained critic on held-out pairs. Training the DV objective directly is
  // unstable at high MI because of the exponential term.
  const bool debug = std::getenv("SEMCOM_MI_DEBUG") != nullptr;
  for (int step = 0; step < cfg.steps; ++step) {
    if (step == (cfg.steps * 3) / 5 || step == (cfg.steps * 17) / 20) {
      opt.set_lr(opt.lr() * 0.3);
    }
    const size_t b = std::min(static_cast<size_t>(cfg.batch), train_idx.size());
    std::vector<std::pair<int, int>> joint(b), cross(b);
    for (size_t i = 0; i < b; ++i) {
      const int a = train_idx[rng.uniform_int(train_idx.size())];
      joint[i] = {a, a};
      const int xa = train_idx[rng.uniform_int(train_idx.size())];
      int yb = train_idx[rng.uniform_int(train_idx.size())];
      while (yb == xa && train_idx.size() > 1) {
        yb = train_idx[rng.uniform_int(train_idx.size())];
      }
      cross[i] = {xa, yb};
    }
    critic.zero_grad();
    Tensor tj = critic.forward(critic_input(x, y, joint), true);
    // logistic loss, label 1: d/dT = sigmoid(T) - 1
    Tensor gj(tj.shape);
    for (size_t i = 0; i < b; ++i) {
      gj.data[i] = (1.0 / (1.0 + std::exp(-tj.data[i])) - 1.0) /
                   static_cast<double>(b);
    }
    critic.backward(gj);

    Tensor tm = critic.forward(critic_input(x, y, cross), true);
    // logistic loss, label 0: d/dT = sigmoid(T)
    Tensor gm(tm.shape);
    for (size_t i = 0; i < b; ++i) {
      gm.data[i] =
          (1.0 / (1.0 + std::exp(-tm.data[i]))) / static_cast<double>(b);
    }
    critic.backward(gm);
    opt.step();
    if (debug && step % 400 == 0) {
      double mj = 0.0, mm = 0.0;
      for (double v : tj.data) mj += v;
      for (double v : tm.data) mm += v;
      std::fprintf(stderr, "mi step %d: joint T=%.3f cross T=%.3f\n", step,
                   mj / b, mm / b);
    }
  }

  Rng eval_rng(derive_seed({seed, hash_str("mi-eval")}));
  const double est = dv_estimate(critic, x, y, held_idx, cfg.clip,
                                 cfg.eval_product_samples, eval_rng);
  return std::max(est, -0.05);
}

}  // namespace

double mi_leakage(const Tensor& originals, const Tensor& reconstructions,
                  const MiEstimatorConfig& cfg, uint64_t seed) {
  if (originals.dim(0) != reconstructions.dim(0)) {
    throw ValidationError("mi_leakage: pair count mismatch");
  }
  Tensor x = project_gray(originals, cfg.proj_hw);
  Tensor y = project_gray(reconstructions, cfg.proj_hw);
  return mi_core(std::move(x), std::move(y), cfg, seed);
}

double mi_leakage_vectors(const Tensor& x, const Tensor& y,
                          const MiEstimatorConfig& cfg, uint64_t seed) {
  return mi_core(x, y, cfg, seed);
}

// ------------------------------------------------------------------ cost

std::string hardware_descriptor() {
  std::string model = "unknown-cpu";
  std::ifstream cpuinfo("/proc/cpuinfo");
  std::string line;
  while (std::getline(cpuinfo, line)) {
    if (line.rfind("model name", 0) == 0) {
      const auto pos = line.find(':');
      if (pos != std::string::npos) model = line.substr(pos + 2);
      break;
    }
  }
  return model;
}

void profile_analytic(codec::SchemeModel& model, long long* flops,
                      long long* params) {
  const auto& spec = model.spec;
  const std::vector<size_t> img_shape = {1, static_cast<size_t>(spec.in_c),
                                         static_cast<size_t>(spec.in_h),
                                         static_cast<size_t>(spec.in_w)};
  const std::vector<size_t> feat_shape = {1, static_cast<size_t>(spec.d)};
  long long fl = 0, pa = 0;
  for (auto& [name, net] : model.named_nets()) {
    pa += static_cast<long long>(net->param_count());
    if (name == "backbone") {
      fl += net->forward_flops(img_shape);
    } else if (name == "projector" || name == "logvar_head") {
      fl += net->forward_flops({1, spec.backbone_out_dim()});
    } else {
      fl += net->forward_flops(feat_shape);
    }
  }
  if (auto* cb = std::get_if<privacy::Codebook>(&model.mechanism)) {
    pa += static_cast<long long>(cb->codewords.size());
    // nearest-codeword search: K * seg_dim multiply-adds per segment
    fl += 2LL * cb->K * spec.d;
  }
  *flops = fl;
  *params = pa;
}

namespace {

double median5(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace

ProfileResult profile(codec::SchemeModel& model, const Tensor& sample,
                      int batch_size, double snr_db) {
  ProfileResult res;
  profile_analytic(model, &res.flops, &res.params);
  res.hardware = hardware_descriptor();

  // scratch clone for the training-pass timing
  const auto tmp = std::filesystem::temp_directory_path() /
                   ("semcom-profile-" + std::to_string(::getpid()) + ".bundle");
  codec::save_bundle(tmp, model);
  codec::SchemeModel scratch = codec::load_bundle(tmp);
  std::filesystem::remove(tmp);

  train::TrainOptions topt;
  topt.snr_train_db = snr_db;
  topt.run_seed = 99;
  topt.epochs = 1;
  topt.lbvq_warmup_epochs = 0;  // measure the digital path
  train::Trainer trainer(scratch, topt);
  trainer.begin_epoch(0, sample);
  const size_t n = sample.dim(0);
  std::vector<int> labels(n, 0);
  for (size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i % 2);

  auto run_epoch = [&] {
    for (size_t start = 0; start < n; start += batch_size) {
      const size_t end = std::min(n, start + static_cast<size_t>(batch_size));
      Tensor batch({end - start, sample.dim(1), sample.dim(2), sample.dim(3)});
      std::copy_n(sample.row(start), batch.numel(), batch.data.data());
      std::vector<int> blabels(labels.begin() + start, labels.begin() + end);
      trainer.step(batch, blabels);
    }
  };
  run_epoch();  // warm-up
  std::vector<double> epoch_times;
  for (int r = 0; r < 5; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    run_epoch();
    const auto t1 = std::chrono::steady_clock::now();
    epoch_times.push_back(std::chrono::duration<double>(t1 - t0).count());
  }
  res.epoch_seconds = median5(epoch_times);

  // single-instance inference: transmit + task inference
  Tensor one({1, sample.dim(1), sample.dim(2), sample.dim(3)});
  std::copy_n(sample.row(0), one.numel(), one.data.data());
  auto run_inference = [&] {
    auto tx = codec::transmit_batch(model, one, snr_db, 42, 0);
    codec::infer_task(model, tx.head_in);
  };
  run_inference();  // warm-up
  std::vector<double> inf_times;
  const int repeats = 20;
  for (int r = 0; r < 5; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < repeats; ++i) run_inference();
    const auto t1 = std::chrono::steady_clock::now();
    inf_times.push_back(std::chrono::duration<double>(t1 - t0).count() /
                        repeats);
  }
  res.inference_seconds = median5(inf_times);
  return res;
}

}  // namespace semcom::metrics
