#include "semcom/codec.hpp"

#include <cstring>
#include <fstream>

#include "semcom/channel.hpp"
#include "semcom/rng.hpp"

namespace semcom::codec {

using nn::Sequential;

Scheme scheme_from_string(const std::string& s) {
  if (s == "baseline") return Scheme::kBaseline;
  if (s == "dp") return Scheme::kDp;
  if (s == "encryption") return Scheme::kEncryption;
  if (s == "ibal") return Scheme::kIbal;
  if (s == "lbvq") return Scheme::kLbvq;
  throw ValidationError("unknown scheme: " + s);
}

std::string scheme_to_string(Scheme s) {
  switch (s) {
    case Scheme::kBaseline: return "baseline";
    case Scheme::kDp: return "dp";
    case Scheme::kEncryption: return "encryption";
    case Scheme::kIbal: return "ibal";
    case Scheme::kLbvq: return "lbvq";
  }
  return "?";
}

void EncoderSpec::validate() const {
  if (d <= 0 || d % 2 != 0) {
    throw ValidationError("encoder: d must be positive and even");
  }
  if (widths.size() != 4) {
    throw ValidationError("encoder: expected 4 conv block widths");
  }
  if (in_h % 16 != 0 || in_w % 16 != 0) {
    throw ValidationError("encoder: input resolution must be divisible by 16");
  }
}

size_t EncoderSpec::backbone_out_dim() const {
  return widths.back() * static_cast<size_t>(in_h / 16) * (in_w / 16);
}

Sequential build_backbone(const EncoderSpec& spec) {
  spec.validate();
  Sequential net;
  size_t cin = static_cast<size_t>(spec.in_c);
  for (size_t w : spec.widths) {
    net.emplace<nn::Conv2d>(cin, w, 3, 2, 1);
    net.emplace<nn::ReLU>();
    cin = w;
  }
  net.emplace<nn::Flatten>();
  return net;
}

Sequential build_projector(const EncoderSpec& spec) {
  Sequential net;
  net.emplace<nn::Linear>(spec.backbone_out_dim(), static_cast<size_t>(spec.d));
  return net;
}

Sequential build_task_head(int d, const TaskHeadSpec& head) {
  Sequential net;
  net.emplace<nn::Linear>(static_cast<size_t>(d), 128);
  net.emplace<nn::ReLU>();
  net.emplace<nn::Linear>(128, head.binary ? 1 : head.num_classes);
  return net;
}

Sequential build_image_decoder(int in_dim, int out_h, int out_w) {
  if (out_h != out_w || (out_h != 32 && out_h != 64)) {
    throw ValidationError("image decoder: supported outputs are 32x32 and 64x64");
  }
  Sequential net;
  net.emplace<nn::Linear>(static_cast<size_t>(in_dim), 64 * 4 * 4);
  net.emplace<nn::ReLU>();
  net.emplace<nn::Reshape>(64, 4, 4);
  // 4 -> 8
  net.emplace<nn::NearestUpsample2x>();
  net.emplace<nn::Conv2d>(64, 64, 3, 1, 1);
  net.emplace<nn::ReLU>();
  // 8 -> 16
  net.emplace<nn::NearestUpsample2x>();
  net.emplace<nn::Conv2d>(64, 32, 3, 1, 1);
  net.emplace<nn::ReLU>();
  if (out_h == 32) {
    net.emplace<nn::NearestUpsample2x>();
    net.emplace<nn::Conv2d>(32, 3, 3, 1, 1);
  } else {
    net.emplace<nn::NearestUpsample2x>();
    net.emplace<nn::Conv2d>(32, 16, 3, 1, 1);
    net.emplace<nn::ReLU>();
    net.emplace<nn::NearestUpsample2x>();
    net.emplace<nn::Conv2d>(16, 3, 3, 1, 1);
  }
  net.emplace<nn::Sigmoid>();
  return net;
}

Sequential build_remapper(int d, int hidden) {
  Sequential net;
  net.emplace<nn::Linear>(static_cast<size_t>(d), static_cast<size_t>(hidden));
  net.emplace<nn::ReLU>();
  net.emplace<nn::Linear>(static_cast<size_t>(hidden), static_cast<size_t>(hidden));
  net.emplace<nn::ReLU>();
  net.emplace<nn::Linear>(static_cast<size_t>(hidden), static_cast<size_t>(d));
  return net;
}

std::vector<std::pair<std::string, Sequential*>> SchemeModel::named_nets() {
  std::vector<std::pair<std::string, Sequential*>> nets;
  nets.emplace_back("backbone", &backbone);
  nets.emplace_back("projector", &projector);
  nets.emplace_back("head", &head);
  if (scheme == Scheme::kIbal) {
    nets.emplace_back("logvar_head", &logvar_head);
    nets.emplace_back("sim_adversary", &sim_adversary);
  }
  if (scheme == Scheme::kLbvq) {
    nets.emplace_back("remapper", &remapper);
  }
  return nets;
}

void SchemeModel::init_params(uint64_t seed) {
  for (auto& [name, net] : named_nets()) {
    net->init(derive_seed({seed, hash_str(name.c_str())}));
  }
}

SchemeModel build_scheme_model(const BuildOptions& opt) {
  SchemeModel m;
  m.scheme = opt.scheme;
  m.spec = opt.spec;
  m.head_spec = opt.head;
  m.backbone = build_backbone(opt.spec);
  m.projector = build_projector(opt.spec);
  m.head = build_task_head(opt.spec.d, opt.head);
  switch (opt.scheme) {
    case Scheme::kBaseline:
      m.mechanism = privacy::NoMechanism{};
      break;
    case Scheme::kDp: {
      opt.dp.validate();
      m.mechanism = opt.dp;
      break;
    }
    case Scheme::kEncryption: {
      m.mechanism = privacy::make_shuffle_key(
          opt.shuffle_key_hex, static_cast<size_t>(opt.spec.d));
      break;
    }
    case Scheme::kIbal: {
      opt.ibal.validate();
      m.mechanism = opt.ibal;
      m.logvar_head = build_projector(opt.spec);
      m.sim_adversary =
          build_image_decoder(opt.spec.d, opt.spec.in_h, opt.spec.in_w);
      break;
    }
    case Scheme::kLbvq: {
      privacy::Codebook cb;
      cb.K = opt.codebook_k;
      cb.seg_dim = opt.seg_dim;
      cb.commitment_beta = opt.commitment_beta;
      cb.codewords.assign(static_cast<size_t>(cb.K) * cb.seg_dim, 0.0);
      cb.validate(static_cast<size_t>(opt.spec.d));
      m.mechanism = cb;
      m.remapper = build_remapper(opt.spec.d, opt.remap_hidden);
      break;
    }
  }
  return m;
}

Tensor encode(SchemeModel& model, const Tensor& images) {
  if (images.shape.size() != 4 ||
      images.dim(1) != static_cast<size_t>(model.spec.in_c) ||
      images.dim(2) != static_cast<size_t>(model.spec.in_h) ||
      images.dim(3) != static_cast<size_t>(model.spec.in_w)) {
    throw ValidationError("encode: image shape does not match encoder spec");
  }
  Tensor feats = model.projector.forward(model.backbone.forward(images));
  if (model.spec.output_norm) {
    nn::RowPowerNorm norm;
    feats = norm.forward(feats, false);
  }
  return feats;
}

Tensor infer_task(SchemeModel& model, const Tensor& received) {
  if (received.row_size() != static_cast<size_t>(model.spec.d)) {
    throw ValidationError("infer_task: expected feature dim " +
                          std::to_string(model.spec.d));
  }
  return model.head.forward(received);
}

TransmissionResult transmit_batch(SchemeModel& model, const Tensor& images,
                                  double snr_db, uint64_t seed,
                                  uint64_t msg_counter_base) {
  const size_t n = images.dim(0);
  const size_t d = static_cast<size_t>(model.spec.d);
  Tensor feats = model.projector.forward(model.backbone.forward(images));

  TransmissionResult res;
  res.digital = std::holds_alternative<privacy::Codebook>(model.mechanism);
  res.head_in = Tensor({n, d});
  if (res.digital) {
    const auto& cb = std::get<privacy::Codebook>(model.mechanism);
    res.segs_per_row = static_cast<int>(d) / cb.seg_dim;
    res.intercepted_indices.resize(n * res.segs_per_row);
    res.prenoise_indices.resize(n * res.segs_per_row);
  } else {
    res.intercepted_analog = Tensor({n, d});
    res.prenoise_analog = Tensor({n, d});
  }

  std::vector<double> row(d);
  for (size_t i = 0; i < n; ++i) {
    std::copy_n(feats.row(i), d, row.begin());
    const uint64_t msg = msg_counter_base + i;
    const uint64_t noise_seed = derive_seed({seed, msg, hash_str("awgn")});
    const uint64_t mech_seed = derive_seed({seed, msg, hash_str("mech")});
    privacy::TransmitBlock tx = privacy::apply_mechanism(
        row, model.mechanism, privacy::Mode::kEval, mech_seed, msg);
    if (tx.digital) {
      const auto& cb = std::get<privacy::Codebook>(model.mechanism);
      channel::SymbolBlock mod = channel::qam_modulate(tx.indices, cb.K);
      channel::SymbolBlock rx = channel::awgn(mod, snr_db, noise_seed);
      std::vector<int> idx_recv = channel::qam_demodulate(rx, cb.K);
      std::copy(tx.indices.begin(), tx.indices.end(),
                res.prenoise_indices.begin() + i * res.segs_per_row);
      std::copy(idx_recv.begin(), idx_recv.end(),
                res.intercepted_indices.begin() + i * res.segs_per_row);
      double* out = res.head_in.row(i);
      for (int s = 0; s < res.segs_per_row; ++s) {
        std::copy_n(cb.codeword(idx_recv[s]), cb.seg_dim,
                    out + static_cast<size_t>(s) * cb.seg_dim);
      }
    } else {
      channel::SymbolBlock sym = channel::from_real_view(tx.analog, tx.scale);
      channel::SymbolBlock rx = channel::awgn(sym, snr_db, noise_seed);
      std::vector<double> received = channel::real_view(rx);
      std::copy_n(tx.analog.begin(), d, res.prenoise_analog.row(i));
      std::copy_n(received.begin(), d, res.intercepted_analog.row(i));
      if (std::holds_alternative<privacy::ShuffleKey>(model.mechanism)) {
        received = privacy::shuffle_decrypt(
            received, std::get<privacy::ShuffleKey>(model.mechanism), msg);
      }
      std::copy_n(received.begin(), d, res.head_in.row(i));
    }
  }
  if (res.digital) {
    // de-quantization refinement before the head
    res.head_in = model.remapper.forward(res.head_in);
  }
  return res;
}

// ------------------------------------------------------------------ bundle

namespace {

constexpr char kMagic[] = "SEMCOMB1\n";

nlohmann::json mechanism_to_json(const privacy::MechanismConfig& m) {
  nlohmann::json j;
  j["kind"] = privacy::mechanism_name(m);
  if (const auto* dp = std::get_if<privacy::DPConfig>(&m)) {
    j["epsilon"] = dp->epsilon;
    j["clip_bound"] = dp->clip_bound;
  } else if (const auto* key = std::get_if<privacy::ShuffleKey>(&m)) {
    char buf[33];
    std::snprintf(buf, sizeof(buf), "%016llx%016llx",
                  static_cast<unsigned long long>(key->hi),
                  static_cast<unsigned long long>(key->lo));
    j["key"] = buf;
    j["d"] = key->d;
  } else if (const auto* ib = std::get_if<privacy::IBALConfig>(&m)) {
    j["lambda_adv"] = ib->lambda_adv;
    j["lambda_ib"] = ib->lambda_ib;
  } else if (const auto* cb = std::get_if<privacy::Codebook>(&m)) {
    j["K"] = cb->K;
    j["seg_dim"] = cb->seg_dim;
    j["commitment_beta"] = cb->commitment_beta;
  }
  return j;
}

void write_u64(std::ofstream& out, uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

uint64_t read_u64(std::ifstream& in) {
  uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

}  // namespace

void save_bundle(const std::filesystem::path& path, SchemeModel& model) {
  nlohmann::json header;
  header["format"] = "semcom-bundle-v1";
  header["scheme"] = scheme_to_string(model.scheme);
  header["spec"] = {{"in_c", model.spec.in_c},   {"in_h", model.spec.in_h},
                    {"in_w", model.spec.in_w},   {"d", model.spec.d},
                    {"widths", model.spec.widths},
                    {"output_norm", model.spec.output_norm}};
  header["head"] = {{"binary", model.head_spec.binary},
                    {"num_classes", model.head_spec.num_classes}};
  header["mechanism"] = mechanism_to_json(model.mechanism);
  if (model.scheme == Scheme::kLbvq) {
    const auto& cb = std::get<privacy::Codebook>(model.mechanism);
    size_t hidden = 0;
    if (auto* lin = dynamic_cast<nn::Linear*>(model.remapper.layers()[0].get())) {
      hidden = lin->out_;
    }
    header["remap_hidden"] = hidden;
    (void)cb;
  }
  header["meta"] = model.meta;

  std::vector<std::pair<std::string, const std::vector<double>*>> arrays;
  for (auto& [net_name, net] : model.named_nets()) {
    size_t li = 0;
    for (auto& layer : net->layers()) {
      for (auto* p : layer->params()) {
        arrays.emplace_back(
            net_name + "." + std::to_string(li) + "." + p->name, &p->value);
      }
      ++li;
    }
  }
  if (auto* cb = std::get_if<privacy::Codebook>(&model.mechanism)) {
    arrays.emplace_back("codebook.codewords", &cb->codewords);
  }

  nlohmann::json manifest = nlohmann::json::array();
  for (auto& [name, vec] : arrays) {
    manifest.push_back({{"name", name}, {"count", vec->size()}});
  }
  header["arrays"] = manifest;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw NotFoundError("bundle: cannot write " + path.string());
  const std::string hdr = header.dump();
  out.write(kMagic, sizeof(kMagic) - 1);
  write_u64(out, hdr.size());
  out.write(hdr.data(), static_cast<std::streamsize>(hdr.size()));
  for (auto& [name, vec] : arrays) {
    out.write(reinterpret_cast<const char*>(vec->data()),
              static_cast<std::streamsize>(vec->size() * sizeof(double)));
  }
  if (!out) throw IntegrityError("bundle: short write to " + path.string());
}

SchemeModel load_bundle(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("bundle: not found: " + path.string());
  char magic[sizeof(kMagic) - 1];
  in.read(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
    throw IntegrityError("bundle: bad magic in " + path.string());
  }
  const uint64_t hdr_len = read_u64(in);
  std::string hdr(hdr_len, '\0');
  in.read(hdr.data(), static_cast<std::streamsize>(hdr_len));
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(hdr);
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError("bundle: bad header json: " + std::string(e.what()));
  }

  BuildOptions opt;
  opt.scheme = scheme_from_string(header.at("scheme").get<std::string>());
  const auto& spec = header.at("spec");
  opt.spec.in_c = spec.at("in_c").get<int>();
  opt.spec.in_h = spec.at("in_h").get<int>();
  opt.spec.in_w = spec.at("in_w").get<int>();
  opt.spec.d = spec.at("d").get<int>();
  opt.spec.widths = spec.at("widths").get<std::vector<size_t>>();
  opt.spec.output_norm = spec.at("output_norm").get<bool>();
  opt.head.binary = header.at("head").at("binary").get<bool>();
  opt.head.num_classes = header.at("head").at("num_classes").get<int>();
  const auto& mech = header.at("mechanism");
  const std::string kind = mech.at("kind").get<std::string>();
  if (kind == "dp") {
    opt.dp.epsilon = mech.at("epsilon").get<double>();
    opt.dp.clip_bound = mech.at("clip_bound").get<double>();
  } else if (kind == "encryption") {
    opt.shuffle_key_hex = mech.at("key").get<std::string>();
  } else if (kind == "ibal") {
    opt.ibal.lambda_adv = mech.at("lambda_adv").get<double>();
    opt.ibal.lambda_ib = mech.at("lambda_ib").get<double>();
  } else if (kind == "lbvq") {
    opt.codebook_k = mech.at("K").get<int>();
    opt.seg_dim = mech.at("seg_dim").get<int>();
    opt.commitment_beta = mech.at("commitment_beta").get<double>();
    opt.remap_hidden = header.at("remap_hidden").get<int>();
  }

  SchemeModel model = build_scheme_model(opt);
  model.meta = header.value("meta", nlohmann::json::object());

  std::vector<std::pair<std::string, std::vector<double>*>> arrays;
  for (auto& [net_name, net] : model.named_nets()) {
    size_t li = 0;
    for (auto& layer : net->layers()) {
      for (auto* p : layer->params()) {
        arrays.emplace_back(
            net_name + "." + std::to_string(li) + "." + p->name, &p->value);
      }
      ++li;
    }
  }
  if (auto* cb = std::get_if<privacy::Codebook>(&model.mechanism)) {
    arrays.emplace_back("codebook.codewords", &cb->codewords);
  }

  const auto& manifest = header.at("arrays");
  if (manifest.size() != arrays.size()) {
    throw IntegrityError("bundle: array manifest mismatch in " + path.string());
  }
  for (size_t i = 0; i < arrays.size(); ++i) {
    const auto& entry = manifest[i];
    if (entry.at("name").get<std::string>() != arrays[i].first ||
        entry.at("count").get<size_t>() != arrays[i].second->size()) {
      throw IntegrityError("bundle: array " + arrays[i].first +
                           " does not match manifest in " + path.string());
    }
    in.read(reinterpret_cast<char*>(arrays[i].second->data()),
            static_cast<std::streamsize>(arrays[i].second->size() *
                                         sizeof(double)));
  }
  if (!in) throw IntegrityError("bundle: truncated arrays in " + path.string());
  return model;
}

}  // namespace semcom::codec
