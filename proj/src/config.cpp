#include "semcom/config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "semcom/channel.hpp"
#include "semcom/errors.hpp"

namespace semcom::harness {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(s);
  while (std::getline(ss, cur, ',')) {
    const std::string t = trim(cur);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

[[noreturn]] void fail(const std::string& origin, size_t line,
                       const std::string& msg) {
  throw ValidationError(origin + ":" + std::to_string(line) + ": " + msg);
}

double parse_double(const std::string& origin, size_t line,
                    const std::string& v) {
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    fail(origin, line, "expected a number, got '" + v + "'");
  }
}

long long parse_int(const std::string& origin, size_t line,
                    const std::string& v) {
  try {
    size_t pos = 0;
    const long long d = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    fail(origin, line, "expected an integer, got '" + v + "'");
  }
}

bool parse_bool(const std::string& origin, size_t line, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(origin, line, "expected true/false, got '" + v + "'");
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text,
                                   const std::string& origin) {
  ExperimentConfig cfg;
  cfg.source_path = origin;

  using Setter = std::function<void(size_t, const std::string&)>;
  std::map<std::string, Setter> setters;
  auto str_key = [&](const char* k, std::string* dst) {
    setters[k] = [dst](size_t, const std::string& v) { *dst = v; };
  };
  auto dbl_key = [&](const char* k, double* dst) {
    setters[k] = [dst, origin](size_t line, const std::string& v) {
      *dst = parse_double(origin, line, v);
    };
  };
  auto int_key = [&](const char* k, int* dst) {
    setters[k] = [dst, origin](size_t line, const std::string& v) {
      *dst = static_cast<int>(parse_int(origin, line, v));
    };
  };
  auto bool_key = [&](const char* k, bool* dst) {
    setters[k] = [dst, origin](size_t line, const std::string& v) {
      *dst = parse_bool(origin, line, v);
    };
  };
  auto dbl_list_key = [&](const char* k, std::vector<double>* dst) {
    setters[k] = [dst, origin](size_t line, const std::string& v) {
      dst->clear();
      for (const auto& item : split_list(v)) {
        dst->push_back(parse_double(origin, line, item));
      }
    };
  };

  str_key("scheme", &cfg.scheme);
  str_key("dataset", &cfg.dataset);
  str_key("dataset_root", &cfg.dataset_root);
  str_key("attribute", &cfg.attribute);
  dbl_key("snr_train_db", &cfg.snr_train_db);
  dbl_list_key("snr_test_db", &cfg.snr_test_db);
  int_key("d", &cfg.d);
  int_key("batch_size", &cfg.batch_size);
  int_key("epochs", &cfg.epochs);
  setters["seeds"] = [&cfg, origin](size_t line, const std::string& v) {
    cfg.seeds.clear();
    for (const auto& item : split_list(v)) {
      cfg.seeds.push_back(static_cast<uint64_t>(parse_int(origin, line, item)));
    }
  };
  dbl_key("lr", &cfg.lr);
  int_key("train_subset", &cfg.train_subset);
  int_key("eval_subset", &cfg.eval_subset);
  dbl_key("dp_epsilon", &cfg.dp_epsilon);
  dbl_key("dp_clip", &cfg.dp_clip);
  str_key("shuffle_key", &cfg.shuffle_key);
  dbl_key("lambda_adv", &cfg.lambda_adv);
  dbl_key("lambda_ib", &cfg.lambda_ib);
  int_key("codebook_k", &cfg.codebook_k);
  int_key("seg_dim", &cfg.seg_dim);
  dbl_key("commitment_beta", &cfg.commitment_beta);
  int_key("lbvq_warmup_epochs", &cfg.lbvq_warmup_epochs);
  int_key("remap_hidden", &cfg.remap_hidden);
  int_key("attack_pairs", &cfg.attack_pairs);
  int_key("attack_epochs", &cfg.attack_epochs);
  int_key("attack_batch", &cfg.attack_batch);
  dbl_list_key("attack_snr_db", &cfg.attack_snr_db);
  bool_key("attack_pre_noise", &cfg.attack_pre_noise);
  int_key("perceptual_train_images", &cfg.perceptual_train_images);
  int_key("mi_pairs", &cfg.mi_pairs);
  int_key("mi_steps", &cfg.mi_steps);
  int_key("mi_hidden", &cfg.mi_hidden);
  int_key("mi_batch", &cfg.mi_batch);
  dbl_key("mi_lr", &cfg.mi_lr);
  int_key("profile_sample", &cfg.profile_sample);

  std::stringstream ss(text);
  std::string line;
  size_t lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(origin, lineno, "expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) {
      fail(origin, lineno, "unknown key '" + key + "'");
    }
    it->second(lineno, value);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("config: cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string());
}

void ExperimentConfig::validate() const {
  codec::scheme_from_string(scheme);  // throws on unknown scheme
  if (dataset != "cifar10" && dataset != "celeba") {
    throw ValidationError("config: dataset must be cifar10 or celeba");
  }
  if (dataset == "celeba" && attribute.empty()) {
    throw ValidationError("config: the celeba task needs an attribute");
  }
  if (dataset == "cifar10" && !attribute.empty()) {
    throw ValidationError("config: attribute is only valid for celeba");
  }
  if (d <= 0 || d % 2 != 0) {
    throw ValidationError("config: d must be positive and even");
  }
  if (batch_size <= 0) throw ValidationError("config: batch_size must be >= 1");
  if (epochs <= 0) throw ValidationError("config: epochs must be >= 1");
  if (seeds.empty()) throw ValidationError("config: seeds must be non-empty");
  if (snr_test_db.empty()) {
    throw ValidationError("config: snr_test_db must be non-empty");
  }
  if (scheme == "dp" && !(dp_epsilon > 0.0)) {
    throw ValidationError("config: dp_epsilon must be positive");
  }
  if (scheme == "lbvq") {
    if (d % seg_dim != 0) {
      throw ValidationError("config: d must be divisible by seg_dim");
    }
    if (!channel::is_square_power_of_two(codebook_k)) {
      throw ValidationError(
          "config: codebook_k must be a square power of two so indices map "
          "to QAM symbols");
    }
  }
  if (!shuffle_key.empty() && shuffle_key.size() != 32) {
    throw ValidationError("config: shuffle_key must be 32 hex chars");
  }
  if (mi_pairs < 16) throw ValidationError("config: mi_pairs too small");
  if (attack_pairs <= 0) {
    throw ValidationError("config: attack_pairs must be positive");
  }
}

std::filesystem::path ExperimentConfig::resolved_data_root() const {
  if (const char* env = std::getenv("SEMCOM_DATA_ROOT")) {
    return std::filesystem::path(env);
  }
  return std::filesystem::path(dataset_root);
}

std::string ExperimentConfig::scheme_id() const {
  if (scheme == "dp") {
    std::ostringstream os;
    os << "dp-" << dp_epsilon;
    return os.str();
  }
  return scheme;
}

std::string ExperimentConfig::canonical_text() const {
  std::ostringstream os;
  os.precision(17);
  auto list_d = [&](const std::vector<double>& v) {
    std::ostringstream ls;
    ls.precision(17);
    for (size_t i = 0; i < v.size(); ++i) ls << (i ? "," : "") << v[i];
    return ls.str();
  };
  std::ostringstream seeds_s;
  for (size_t i = 0; i < seeds.size(); ++i) seeds_s << (i ? "," : "") << seeds[i];
  os << "attack_batch=" << attack_batch << "\n"
     << "attack_epochs=" << attack_epochs << "\n"
     << "attack_pairs=" << attack_pairs << "\n"
     << "attack_pre_noise=" << (attack_pre_noise ? "true" : "false") << "\n"
     << "attack_snr_db=" << list_d(attack_snr_db) << "\n"
     << "attribute=" << attribute << "\n"
     << "batch_size=" << batch_size << "\n"
     << "codebook_k=" << codebook_k << "\n"
     << "commitment_beta=" << commitment_beta << "\n"
     << "d=" << d << "\n"
     << "dataset=" << dataset << "\n"
     << "dp_clip=" << dp_clip << "\n"
     << "dp_epsilon=" << dp_epsilon << "\n"
     << "epochs=" << epochs << "\n"
     << "lambda_adv=" << lambda_adv << "\n"
     << "lambda_ib=" << lambda_ib << "\n"
     << "lbvq_warmup_epochs=" << lbvq_warmup_epochs << "\n"
     << "lr=" << lr << "\n"
     << "mi_batch=" << mi_batch << "\n"
     << "mi_hidden=" << mi_hidden << "\n"
     << "mi_lr=" << mi_lr << "\n"
     << "mi_pairs=" << mi_pairs << "\n"
     << "mi_steps=" << mi_steps << "\n"
     << "perceptual_train_images=" << perceptual_train_images << "\n"
     << "profile_sample=" << profile_sample << "\n"
     << "remap_hidden=" << remap_hidden << "\n"
     << "scheme=" << scheme << "\n"
     << "seeds=" << seeds_s.str() << "\n"
     << "seg_dim=" << seg_dim << "\n"
     << "shuffle_key=" << shuffle_key << "\n"
     << "snr_test_db=" << list_d(snr_test_db) << "\n"
     << "snr_train_db=" << snr_train_db << "\n"
     << "train_subset=" << train_subset << "\n"
     << "eval_subset=" << eval_subset << "\n";
  return os.str();
}

std::string ExperimentConfig::config_hash() const {
  const std::string text = canonical_text();
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) h = (h ^ c) * 0x100000001b3ULL;
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::vector<std::string> ExperimentConfig::non_default_notes() const {
  // reference experimental settings the runner treats as defaults
  std::vector<std::string> notes;
  auto note = [&](const std::string& s) { notes.push_back(s); };
  if (snr_train_db != 12.0) note("snr_train_db=" + std::to_string(snr_train_db) + " (reference 12)");
  if (snr_test_db != std::vector<double>{4, 8, 12, 16, 20}) {
    note("snr_test_db differs from the reference sweep {4,8,12,16,20}");
  }
  if (d != 128) note("d=" + std::to_string(d) + " (reference 128)");
  if (batch_size != 512) {
    note("batch_size=" + std::to_string(batch_size) + " (reference 512)");
  }
  if (scheme == "lbvq" && codebook_k != 16) {
    note("codebook_k=" + std::to_string(codebook_k) + " (reference 16)");
  }
  if (scheme == "dp" && dp_epsilon != 0.05 && dp_epsilon != 0.1 &&
      dp_epsilon != 0.9) {
    note("dp_epsilon=" + std::to_string(dp_epsilon) +
         " (reference budgets 0.05, 0.1, 0.9)");
  }
  return notes;
}

}  // namespace semcom::harness
