#include "semcom/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "semcom/adversary.hpp"
#include "semcom/dataset.hpp"
#include "semcom/image_io.hpp"
#include "semcom/metrics.hpp"
#include "semcom/rng.hpp"
#include "semcom/training.hpp"

namespace semcom::harness {

namespace fs = std::filesystem;

const char* kMetricsHeader =
    "config_hash,scheme,dataset,snr_db,seed,accuracy,mi_leakage_nats,"
    "attacker_mse,attacker_psnr_db,flops,params,preprocess";

namespace {

std::string fmt_double(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

double parse_double_or_nan(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::stod(s);
}

// Cached dataset loads; one experiment process touches the same splits many
// times across schemes and seeds.
const data::LabeledImageSet& load_cached(const std::string& name,
                                         const fs::path& root,
                                         const std::string& split) {
  static std::map<std::string, data::LabeledImageSet> cache;
  const std::string key = name + "|" + root.string() + "|" + split;
  auto it = cache.find(key);
  if (it == cache.end()) {
    it = cache.emplace(key, data::load_dataset(name, root, split)).first;
  }
  return it->second;
}

std::string preprocess_note(const ExperimentConfig& cfg) {
  if (cfg.dataset == "celeba") {
    return "synthetic-face-64x64;attribute=" + cfg.attribute;
  }
  return "synthetic-texture-32x32";
}

std::string effective_shuffle_key(const ExperimentConfig& cfg, uint64_t seed) {
  if (!cfg.shuffle_key.empty()) return cfg.shuffle_key;
  if (const char* env = std::getenv("SEMCOM_SHUFFLE_KEY")) {
    const std::string k = env;
    if (k.size() == 32) return k;
  }
  char buf[33];
  std::snprintf(buf, sizeof(buf), "%016llx%016llx",
                static_cast<unsigned long long>(
                    derive_seed({seed, hash_str("key-hi")})),
                static_cast<unsigned long long>(
                    derive_seed({seed, hash_str("key-lo")})));
  return buf;
}

codec::BuildOptions build_options_from(const ExperimentConfig& cfg,
                                       const data::LabeledImageSet& trainset,
                                       uint64_t seed) {
  codec::BuildOptions opt;
  opt.scheme = codec::scheme_from_string(cfg.scheme);
  opt.spec.in_c = trainset.channels;
  opt.spec.in_h = trainset.height;
  opt.spec.in_w = trainset.width;
  opt.spec.d = cfg.d;
  if (cfg.dataset == "celeba") {
    opt.head.binary = true;
  } else {
    opt.head.binary = false;
    opt.head.num_classes = trainset.num_classes;
  }
  opt.dp.epsilon = cfg.dp_epsilon;
  opt.dp.clip_bound = cfg.dp_clip;
  opt.shuffle_key_hex = effective_shuffle_key(cfg, seed);
  opt.ibal.lambda_adv = cfg.lambda_adv;
  opt.ibal.lambda_ib = cfg.lambda_ib;
  opt.codebook_k = cfg.codebook_k;
  opt.seg_dim = cfg.seg_dim;
  opt.commitment_beta = cfg.commitment_beta;
  opt.remap_hidden = cfg.remap_hidden;
  return opt;
}

const data::LabeledImageSet& task_view(const ExperimentConfig& cfg,
                                       const std::string& split) {
  const auto& raw = load_cached(cfg.dataset, cfg.resolved_data_root(), split);
  if (cfg.dataset != "celeba") return raw;
  static std::map<std::string, data::LabeledImageSet> views;
  const std::string key = cfg.attribute + "|" + split + "|" +
                          cfg.resolved_data_root().string();
  auto it = views.find(key);
  if (it == views.end()) {
    it = views.emplace(key, data::attribute_view(raw, cfg.attribute)).first;
  }
  return it->second;
}

std::vector<int> train_subset_indices(const ExperimentConfig& cfg,
                                      const data::LabeledImageSet& set) {
  const size_t want = cfg.train_subset > 0
                          ? std::min<size_t>(cfg.train_subset, set.size())
                          : set.size();
  return data::deterministic_subset(
      set.size(), want, derive_seed({hash_str("train-subset"), want}));
}

std::vector<int> eval_subset_indices(const ExperimentConfig& cfg,
                                     const data::LabeledImageSet& set) {
  const size_t want = cfg.eval_subset > 0
                          ? std::min<size_t>(cfg.eval_subset, set.size())
                          : set.size();
  return data::deterministic_subset(
      set.size(), want, derive_seed({hash_str("eval-subset"), want}));
}

uint64_t run_seed_of(const ExperimentConfig& cfg, uint64_t seed) {
  return derive_seed({seed, hash_str(cfg.scheme_id().c_str()),
                      hash_str(cfg.dataset.c_str())});
}

}  // namespace

std::string MetricsRecord::to_csv_row() const {
  std::ostringstream os;
  os << config_hash << "," << scheme << "," << dataset << ","
     << fmt_double(snr_db) << "," << seed << "," << fmt_double(accuracy) << ","
     << fmt_double(mi_leakage_nats) << "," << fmt_double(attacker_mse) << ","
     << fmt_double(attacker_psnr_db) << "," << flops << "," << params << ","
     << preprocess;
  return os.str();
}

fs::path run_dir(const fs::path& out, const ExperimentConfig& cfg,
                 uint64_t seed) {
  return out / cfg.scheme_id() / std::to_string(seed);
}

std::vector<MetricsRecord> read_metrics_csv(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw NotFoundError("metrics: cannot open " + file.string());
  std::string line;
  std::getline(in, line);
  if (line != kMetricsHeader) {
    throw IntegrityError("metrics: unexpected header in " + file.string());
  }
  std::vector<MetricsRecord> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) f.push_back(item);
    while (f.size() < 12) f.push_back("");
    MetricsRecord r;
    r.config_hash = f[0];
    r.scheme = f[1];
    r.dataset = f[2];
    r.snr_db = std::stod(f[3]);
    r.seed = std::stoull(f[4]);
    r.accuracy = parse_double_or_nan(f[5]);
    r.mi_leakage_nats = parse_double_or_nan(f[6]);
    r.attacker_mse = parse_double_or_nan(f[7]);
    r.attacker_psnr_db = parse_double_or_nan(f[8]);
    r.flops = std::stoll(f[9]);
    r.params = std::stoll(f[10]);
    r.preprocess = f[11];
    rows.push_back(std::move(r));
  }
  return rows;
}

namespace {

void write_metrics_csv(const fs::path& file,
                       const std::vector<MetricsRecord>& rows) {
  std::ofstream out(file, std::ios::binary);  // binary: stable newlines
  out << kMetricsHeader << "\n";
  for (const auto& r : rows) out << r.to_csv_row() << "\n";
}

}  // namespace

fs::path run_train(const ExperimentConfig& cfg, const fs::path& out,
                   uint64_t seed) {
  cfg.validate();
  const auto& trainset = task_view(cfg, "train");
  const auto subset = train_subset_indices(cfg, trainset);

  const fs::path dir = run_dir(out, cfg, seed);
  fs::create_directories(dir);
  std::ofstream log(dir / "train.log");
  log << "# run header\n";
  log << "config_hash: " << cfg.config_hash() << "\n";
  log << "config_source: " << cfg.source_path << "\n";
  log << "scheme_id: " << cfg.scheme_id() << "\n";
  log << "seed: " << seed << "\n";
  log << "hardware: " << metrics::hardware_descriptor() << "\n";
  log << "preprocess: " << preprocess_note(cfg) << "\n";
  log << "train_images: " << subset.size() << "\n";
  for (const auto& note : cfg.non_default_notes()) {
    log << "non-default: " << note << "\n";
  }
  log << "# effective config\n";
  std::istringstream cfg_lines(cfg.canonical_text());
  std::string cl;
  while (std::getline(cfg_lines, cl)) log << "cfg: " << cl << "\n";

  const uint64_t run_seed = run_seed_of(cfg, seed);
  codec::BuildOptions opt = build_options_from(cfg, trainset, seed);
  codec::SchemeModel model = codec::build_scheme_model(opt);
  model.init_params(derive_seed({run_seed, hash_str("init")}));

  train::TrainOptions topt;
  topt.lr = cfg.lr;
  topt.snr_train_db = cfg.snr_train_db;
  topt.run_seed = run_seed;
  topt.epochs = cfg.epochs;
  topt.lbvq_warmup_epochs = cfg.lbvq_warmup_epochs;
  train::Trainer trainer(model, topt);

  // sample batch for codebook init / dead-codeword reseeding
  const size_t sample_n = std::min<size_t>(2048, subset.size());
  std::vector<int> sample_idx(subset.begin(), subset.begin() + sample_n);
  Tensor sample = trainset.gather(sample_idx);

  log << "# epoch task sim_recon ib vq total seconds\n";
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    trainer.begin_epoch(epoch, sample);
    auto batches = data::make_batches(subset.size(), cfg.batch_size,
                                      derive_seed({run_seed, static_cast<uint64_t>(epoch)}));
    train::StepLosses sum;
    size_t steps = 0;
    for (const auto& batch : batches) {
      std::vector<int> idx(batch.size());
      for (size_t i = 0; i < batch.size(); ++i) idx[i] = subset[batch[i]];
      Tensor images = trainset.gather(idx);
      std::vector<int> labels = trainset.gather_labels(idx);
      train::StepLosses l = trainer.step(images, labels);
      sum.task += l.task;
      sum.sim_recon += l.sim_recon;
      sum.ib += l.ib;
      sum.vq += l.vq;
      sum.total += l.total;
      ++steps;
    }
    const auto t1 = std::chrono::steady_clock::now();
    const double inv = steps ? 1.0 / static_cast<double>(steps) : 0.0;
    char row[256];
    std::snprintf(row, sizeof(row), "%d %.6f %.6f %.6f %.6f %.6f %.2f\n",
                  epoch, sum.task * inv, sum.sim_recon * inv, sum.ib * inv,
                  sum.vq * inv, sum.total * inv,
                  std::chrono::duration<double>(t1 - t0).count());
    log << row;
    log.flush();
  }

  model.meta = nlohmann::json{
      {"scheme", cfg.scheme_id()},
      {"dataset", cfg.dataset},
      {"attribute", cfg.attribute},
      {"snr_train_db", cfg.snr_train_db},
      {"seed", seed},
      {"epochs", cfg.epochs},
      {"config_hash", cfg.config_hash()},
      {"preprocess", preprocess_note(cfg)},
      {"train_images", subset.size()},
  };
  const fs::path bundle = dir / "bundle";
  codec::save_bundle(bundle, model);
  log << "bundle: " << bundle.string() << "\n";
  return bundle;
}

void run_eval(const ExperimentConfig& cfg, const fs::path& out, uint64_t seed) {
  cfg.validate();
  const fs::path dir = run_dir(out, cfg, seed);
  const fs::path bundle_path = dir / "bundle";
  if (!fs::exists(bundle_path)) {
    throw NotFoundError("run_eval: missing bundle " + bundle_path.string() +
                        " (run train first)");
  }
  codec::SchemeModel model = codec::load_bundle(bundle_path);
  if (model.meta.value("scheme", "") != cfg.scheme_id()) {
    throw ValidationError("run_eval: bundle scheme " +
                          model.meta.value("scheme", "?") +
                          " does not match config " + cfg.scheme_id());
  }
  const auto& evalset = task_view(cfg, "test");
  const auto subset = eval_subset_indices(cfg, evalset);
  const uint64_t run_seed = run_seed_of(cfg, seed);

  long long flops = 0, params = 0;
  metrics::profile_analytic(model, &flops, &params);

  std::vector<MetricsRecord> rows;
  for (double snr : cfg.snr_test_db) {
    const uint64_t eval_seed = derive_seed(
        {run_seed, static_cast<uint64_t>(std::llround(snr * 1000.0)),
         hash_str("eval")});
    size_t hits = 0;
    const size_t batch = 256;
    for (size_t start = 0; start < subset.size(); start += batch) {
      const size_t end = std::min(subset.size(), start + batch);
      std::vector<int> idx(subset.begin() + start, subset.begin() + end);
      Tensor images = evalset.gather(idx);
      std::vector<int> labels = evalset.gather_labels(idx);
      auto tx = codec::transmit_batch(model, images, snr, eval_seed,
                                      /*msg_counter_base=*/start);
      Tensor logits = codec::infer_task(model, tx.head_in);
      const double acc = metrics::accuracy(logits, labels);
      hits += static_cast<size_t>(std::llround(acc * static_cast<double>(idx.size())));
    }
    MetricsRecord r;
    r.config_hash = cfg.config_hash();
    r.scheme = cfg.scheme_id();
    r.dataset = cfg.dataset;
    r.snr_db = snr;
    r.seed = seed;
    r.accuracy = static_cast<double>(hits) / static_cast<double>(subset.size());
    r.flops = flops;
    r.params = params;
    r.preprocess = preprocess_note(cfg);
    rows.push_back(std::move(r));
  }
  write_metrics_csv(dir / "metrics.csv", rows);

  // profiling (timing is intentionally outside metrics.csv)
  const size_t prof_n = std::min<size_t>(cfg.profile_sample, subset.size());
  std::vector<int> prof_idx(subset.begin(), subset.begin() + prof_n);
  Tensor prof_sample = evalset.gather(prof_idx);
  metrics::ProfileResult prof =
      metrics::profile(model, prof_sample, cfg.batch_size, cfg.snr_train_db);
  std::ofstream pcsv(dir / "profile.csv", std::ios::binary);
  pcsv << "config_hash,scheme,seed,flops,params,epoch_seconds,"
          "inference_seconds,profile_sample,hardware\n";
  pcsv << cfg.config_hash() << "," << cfg.scheme_id() << "," << seed << ","
       << prof.flops << "," << prof.params << ","
       << fmt_double(prof.epoch_seconds) << ","
       << fmt_double(prof.inference_seconds) << "," << prof_n << ","
       << prof.hardware << "\n";
}

void run_attack(const ExperimentConfig& cfg, const fs::path& out,
                uint64_t seed) {
  cfg.validate();
  const fs::path dir = run_dir(out, cfg, seed);
  const fs::path metrics_path = dir / "metrics.csv";
  if (!fs::exists(metrics_path)) {
    throw NotFoundError("run_attack: missing " + metrics_path.string() +
                        " (run eval first)");
  }
  codec::SchemeModel model = codec::load_bundle(dir / "bundle");
  auto rows = read_metrics_csv(metrics_path);

  const auto& trainset = task_view(cfg, "train");
  const auto& evalset = task_view(cfg, "test");
  const auto eval_subset = eval_subset_indices(cfg, evalset);
  const uint64_t run_seed = run_seed_of(cfg, seed);
  fs::create_directories(dir / "grids");

  adversary::PerceptualNet perceptual = adversary::build_perceptual_net(
      trainset, cfg.perceptual_train_images,
      derive_seed({hash_str(cfg.dataset.c_str()), hash_str("perceptual")}));

  std::ofstream alog(dir / "attack.log");
  alog << "config_hash: " << cfg.config_hash() << "\n";

  for (double snr : cfg.attack_snr_db) {
    const uint64_t victim_seed = derive_seed(
        {run_seed, static_cast<uint64_t>(std::llround(snr * 1000.0)),
         hash_str("attack-victim")});
    auto victim = adversary::make_victim_query(model, snr, victim_seed,
                                               cfg.attack_pre_noise);
    const int n_pairs =
        std::min<int>(cfg.attack_pairs, static_cast<int>(trainset.size()));
    adversary::AttackPairs pairs = adversary::collect_attack_pairs(
        *victim, trainset, n_pairs, derive_seed({run_seed, hash_str("pairs")}));

    adversary::AttackerSpec spec = adversary::attacker_spec_for(*victim);
    spec.epochs = cfg.attack_epochs;
    spec.batch = cfg.attack_batch;
    adversary::Attacker attacker = adversary::train_attacker(
        pairs, spec, perceptual, derive_seed({run_seed, hash_str("attacker")}));
    alog << "snr " << snr << ": attacker trained on " << n_pairs
         << " pairs, final train loss "
         << (attacker.train_curve.empty() ? 0.0 : attacker.train_curve.back())
         << "\n";

    // attack the victim's live traffic: held-out eval images
    const size_t n_eval =
        std::min<size_t>(cfg.mi_pairs, eval_subset.size());
    std::vector<int> idx(eval_subset.begin(), eval_subset.begin() + n_eval);
    Tensor originals = evalset.gather(idx);
    Tensor intercepted;
    {
      const size_t batch = 256;
      intercepted = Tensor({n_eval, static_cast<size_t>(spec.input_dim)});
      for (size_t start = 0; start < n_eval; start += batch) {
        const size_t end = std::min(n_eval, start + batch);
        Tensor imgs({end - start, originals.dim(1), originals.dim(2),
                     originals.dim(3)});
        std::copy_n(originals.row(start), imgs.numel(), imgs.data.data());
        auto res = victim->query(imgs, /*msg_counter_base=*/1000000 + start);
        if (victim->digital()) {
          Tensor oh = adversary::one_hot_indices(
              res.intercepted_indices, end - start, victim->segs_per_row(),
              victim->codebook_size());
          std::copy_n(oh.data.data(), oh.numel(), intercepted.row(start));
        } else {
          std::copy_n(res.intercepted_analog.data.data(),
                      res.intercepted_analog.numel(), intercepted.row(start));
        }
      }
    }
    adversary::AttackResult result =
        adversary::attack(attacker, intercepted, originals, perceptual);

    metrics::MiEstimatorConfig mi_cfg;
    mi_cfg.steps = cfg.mi_steps;
    mi_cfg.hidden = cfg.mi_hidden;
    mi_cfg.batch = cfg.mi_batch;
    mi_cfg.lr = cfg.mi_lr;
    mi_cfg.min_pairs = std::min(1000, static_cast<int>(n_eval));
    const double mi = metrics::mi_leakage(
        originals, result.reconstructions, mi_cfg,
        derive_seed({run_seed, static_cast<uint64_t>(std::llround(snr * 1000.0)),
                     hash_str("mi")}));
    alog << "snr " << snr << ": attacker_mse " << result.mean_mse
         << " psnr " << result.mean_psnr_db << " mi " << mi << "\n";

    for (auto& r : rows) {
      if (r.snr_db == snr) {
        r.attacker_mse = result.mean_mse;
        r.attacker_psnr_db = result.mean_psnr_db;
        r.mi_leakage_nats = mi;
      }
    }

    // grid: top row originals, bottom row reconstructions
    const int grid_n = static_cast<int>(std::min<size_t>(8, n_eval));
    Tensor grid({static_cast<size_t>(2 * grid_n), originals.dim(1),
                 originals.dim(2), originals.dim(3)});
    for (int i = 0; i < grid_n; ++i) {
      std::copy_n(originals.row(i), originals.row_size(), grid.row(i));
      std::copy_n(result.reconstructions.row(i), originals.row_size(),
                  grid.row(grid_n + i));
    }
    char grid_name[64];
    std::snprintf(grid_name, sizeof(grid_name), "snr%g.ppm", snr);
    imageio::write_grid(dir / "grids" / grid_name, grid, grid_n);
  }
  write_metrics_csv(metrics_path, rows);
}

void run_all(const ExperimentConfig& cfg, const fs::path& out,
             bool with_attack) {
  for (uint64_t seed : cfg.seeds) {
    run_train(cfg, out, seed);
    run_eval(cfg, out, seed);
    if (with_attack) run_attack(cfg, out, seed);
  }
}

// ------------------------------------------------------------------ report

namespace {

struct SeriesPoint {
  double x, y;
};

void write_svg_plot(const fs::path& path, const std::string& title,
                    const std::string& xlabel, const std::string& ylabel,
                    const std::map<std::string, std::vector<SeriesPoint>>& series) {
  const int W = 640, H = 440, ML = 70, MR = 160, MT = 40, MB = 50;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& [name, pts] : series) {
    for (const auto& p : pts) {
      xmin = std::min(xmin, p.x);
      xmax = std::max(xmax, p.x);
      ymin = std::min(ymin, p.y);
      ymax = std::max(ymax, p.y);
    }
  }
  if (series.empty() || xmin > xmax) {
    xmin = 0;
    xmax = 1;
    ymin = 0;
    ymax = 1;
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  const double ypad = 0.08 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;
  auto sx = [&](double x) {
    return ML + (x - xmin) / (xmax - xmin) * (W - ML - MR);
  };
  auto sy = [&](double y) {
    return H - MB - (y - ymin) / (ymax - ymin) * (H - MT - MB);
  };
  static const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                 "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  std::ofstream out(path, std::ios::binary);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
      << "\" height=\"" << H << "\">\n";
  out << "<rect width=\"" << W << "\" height=\"" << H
      << "\" fill=\"white\"/>\n";
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%d\" y=\"24\" font-size=\"16\" "
                "font-family=\"sans-serif\">%s</text>\n",
                ML, title.c_str());
  out << buf;
  // axes
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" "
                "stroke=\"black\"/>\n",
                ML, H - MB, W - MR, H - MB);
  out << buf;
  std::snprintf(buf, sizeof(buf),
                "<line x1=\"%d\" y1=\"%d\" x2=\"%d\" y2=\"%d\" "
                "stroke=\"black\"/>\n",
                ML, MT, ML, H - MB);
  out << buf;
  for (int t = 0; t <= 4; ++t) {
    const double xv = xmin + (xmax - xmin) * t / 4.0;
    const double yv = ymin + (ymax - ymin) * t / 4.0;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%.1f\" y=\"%d\" font-size=\"11\" "
                  "font-family=\"sans-serif\" text-anchor=\"middle\">%.3g"
                  "</text>\n",
                  sx(xv), H - MB + 18, xv);
    out << buf;
    std::snprintf(buf, sizeof(buf),
                  "<text x=\"%d\" y=\"%.1f\" font-size=\"11\" "
                  "font-family=\"sans-serif\" text-anchor=\"end\">%.3g"
                  "</text>\n",
                  ML - 6, sy(yv) + 4, yv);
    out << buf;
  }
  std::snprintf(buf, sizeof(buf),
                "<text x=\"%d\" y=\"%d\" font-size=\"12\" "
                "font-family=\"sans-serif\">%s</text>\n",
                (W - MR + ML) / 2 - 30, H - 12, xlabel.c_str());
  out << buf;
  std::snprintf(buf, sizeof(buf),
                "<text x=\"16\" y=\"%d\" font-size=\"12\" "
                "font-family=\"sans-serif\" transform=\"rotate(-90 16 %d)\">"
                "%s</text>\n",
                (H - MB + MT) / 2 + 30, (H - MB + MT) / 2 + 30, ylabel.c_str());
  out << buf;
  int ci = 0;
  for (const auto& [name, pts] : series) {
    const char* color = colors[ci % 8];
    std::string poly;
    for (const auto& p : pts) {
      char pb[64];
      std::snprintf(pb, sizeof(pb), "%.2f,%.2f ", sx(p.x), sy(p.y));
      poly += pb;
    }
    out << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"2\" points=\"" << poly << "\"/>\n";
    for (const auto& p : pts) {
      std::snprintf(buf, sizeof(buf),
                    "<circle cx=\"%.2f\" cy=\"%.2f\" r=\"3\" fill=\"%s\"/>\n",
                    sx(p.x), sy(p.y), color);
      out << buf;
    }
    std::snprintf(buf, sizeof(buf),
                  "<rect x=\"%d\" y=\"%d\" width=\"12\" height=\"12\" "
                  "fill=\"%s\"/><text x=\"%d\" y=\"%d\" font-size=\"12\" "
                  "font-family=\"sans-serif\">%s</text>\n",
                  W - MR + 10, MT + 20 * ci, color, W - MR + 28,
                  MT + 20 * ci + 10, name.c_str());
    out << buf;
    ++ci;
  }
  out << "</svg>\n";
}

struct ProfileRow {
  long long flops = 0;
  long long params = 0;
  double epoch_seconds = 0.0;
  double inference_seconds = 0.0;
  bool present = false;
};

}  // namespace

void emit_report(const fs::path& out) {
  if (!fs::exists(out)) {
    throw ValidationError("report: results directory does not exist: " +
                          out.string());
  }
  // collect rows across schemes and seeds
  std::vector<MetricsRecord> all;
  std::map<std::string, ProfileRow> profiles;  // per scheme (first seed found)
  std::vector<std::string> scheme_dirs;
  for (const auto& entry : fs::directory_iterator(out)) {
    if (!entry.is_directory()) continue;
    const std::string scheme = entry.path().filename().string();
    if (scheme == "report") continue;
    scheme_dirs.push_back(scheme);
  }
  std::sort(scheme_dirs.begin(), scheme_dirs.end());
  for (const auto& scheme : scheme_dirs) {
    std::vector<std::string> seed_dirs;
    for (const auto& entry : fs::directory_iterator(out / scheme)) {
      if (entry.is_directory()) seed_dirs.push_back(entry.path().filename());
    }
    std::sort(seed_dirs.begin(), seed_dirs.end());
    for (const auto& sd : seed_dirs) {
      const fs::path mpath = out / scheme / sd / "metrics.csv";
      if (fs::exists(mpath)) {
        auto rows = read_metrics_csv(mpath);
        all.insert(all.end(), rows.begin(), rows.end());
      }
      const fs::path ppath = out / scheme / sd / "profile.csv";
      if (fs::exists(ppath) && !profiles[scheme].present) {
        std::ifstream in(ppath);
        std::string line;
        std::getline(in, line);  // header
        if (std::getline(in, line)) {
          std::stringstream ss(line);
          std::string f;
          std::vector<std::string> fields;
          while (std::getline(ss, f, ',')) fields.push_back(f);
          if (fields.size() >= 7) {
            profiles[scheme].flops = std::stoll(fields[3]);
            profiles[scheme].params = std::stoll(fields[4]);
            profiles[scheme].epoch_seconds = std::stod(fields[5]);
            profiles[scheme].inference_seconds = std::stod(fields[6]);
            profiles[scheme].present = true;
          }
        }
      }
    }
  }
  if (all.empty()) {
    throw ValidationError("report: no metrics.csv under " + out.string());
  }
  const fs::path rdir = out / "report";
  fs::create_directories(rdir);

  // mean accuracy / MI per (scheme, snr)
  std::map<std::string, std::map<double, std::vector<double>>> acc, mi;
  for (const auto& r : all) {
    acc[r.scheme][r.snr_db].push_back(r.accuracy);
    if (!std::isnan(r.mi_leakage_nats)) {
      mi[r.scheme][r.snr_db].push_back(r.mi_leakage_nats);
    }
  }
  auto to_series = [](const std::map<std::string, std::map<double, std::vector<double>>>& m) {
    std::map<std::string, std::vector<SeriesPoint>> series;
    for (const auto& [scheme, per_snr] : m) {
      for (const auto& [snr, vals] : per_snr) {
        double mean = 0.0;
        for (double v : vals) mean += v;
        mean /= static_cast<double>(vals.size());
        series[scheme].push_back({snr, mean});
      }
    }
    return series;
  };
  write_svg_plot(rdir / "accuracy_vs_snr.svg", "Task accuracy vs SNR",
                 "SNR (dB)", "accuracy", to_series(acc));
  if (!mi.empty()) {
    write_svg_plot(rdir / "mi_vs_snr.svg", "MI leakage vs SNR", "SNR (dB)",
                   "MI (nats)", to_series(mi));
  }

  // complexity table (Table-1-style columns)
  {
    std::ofstream t(rdir / "complexity_table.md", std::ios::binary);
    t << "| Scheme | FLOPs | Params | Train Time for 1 Epoch | Test Time for "
         "1 Instance |\n";
    t << "|---|---|---|---|---|\n";
    for (const auto& scheme : scheme_dirs) {
      const auto it = profiles.find(scheme);
      if (it == profiles.end() || !it->second.present) continue;
      char buf[256];
      std::snprintf(buf, sizeof(buf),
                    "| %s | %.3f G | %.2f M | %.2f s | %.6f s |\n",
                    scheme.c_str(), it->second.flops / 1e9,
                    it->second.params / 1e6, it->second.epoch_seconds,
                    it->second.inference_seconds);
      t << buf;
    }
  }

  // attribute-accuracy table for face-task rows (mean +- std at each snr)
  {
    std::map<std::string, std::map<std::string, std::vector<double>>> face;
    // face[scheme][attribute] -> accuracies at snr_train-like points
    for (const auto& r : all) {
      if (r.dataset != "celeba") continue;
      const auto pos = r.preprocess.find("attribute=");
      const std::string attr =
          pos == std::string::npos ? "?" : r.preprocess.substr(pos + 10);
      if (r.snr_db == 12.0) face[r.scheme][attr].push_back(r.accuracy);
    }
    if (!face.empty()) {
      std::ofstream t(rdir / "attribute_accuracy.md", std::ios::binary);
      std::vector<std::string> attrs;
      for (const auto& [scheme, per_attr] : face) {
        for (const auto& [attr, v] : per_attr) {
          if (std::find(attrs.begin(), attrs.end(), attr) == attrs.end()) {
            attrs.push_back(attr);
          }
        }
      }
      std::sort(attrs.begin(), attrs.end());
      t << "| Scheme |";
      for (const auto& a : attrs) t << " " << a << " |";
      t << "\n|---|";
      for (size_t i = 0; i < attrs.size(); ++i) t << "---|";
      t << "\n";
      for (const auto& [scheme, per_attr] : face) {
        t << "| " << scheme << " |";
        for (const auto& a : attrs) {
          const auto it = per_attr.find(a);
          if (it == per_attr.end()) {
            t << " - |";
            continue;
          }
          double mean = 0.0, sq = 0.0;
          for (double v : it->second) mean += v;
          mean /= static_cast<double>(it->second.size());
          for (double v : it->second) sq += (v - mean) * (v - mean);
          const double sd = std::sqrt(sq / static_cast<double>(it->second.size()));
          char buf[64];
          std::snprintf(buf, sizeof(buf), " %.1f%% ± %.2f%% |", mean * 100.0,
                        sd * 100.0);
          t << buf;
        }
        t << "\n";
      }
    }
  }
}

}  // namespace semcom::harness
