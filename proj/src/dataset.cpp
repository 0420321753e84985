#include "semcom/dataset.hpp"

#include <fstream>
#include <json.hpp>

#include "semcom/errors.hpp"
#include "semcom/image_io.hpp"
#include "semcom/rng.hpp"

namespace semcom::data {

namespace fs = std::filesystem;
using nlohmann::json;

void LabeledImageSet::image_as_double(size_t i, double* out) const {
  const uint8_t* src = image_u8(i);
  const size_t n = image_elems();
  for (size_t j = 0; j < n; ++j) out[j] = src[j] / 255.0;
}

Tensor LabeledImageSet::gather(const std::vector<int>& indices) const {
  Tensor batch({indices.size(), static_cast<size_t>(channels),
                static_cast<size_t>(height), static_cast<size_t>(width)});
  for (size_t i = 0; i < indices.size(); ++i) {
    image_as_double(static_cast<size_t>(indices[i]), batch.row(i));
  }
  return batch;
}

std::vector<int> LabeledImageSet::gather_labels(
    const std::vector<int>& indices) const {
  std::vector<int> out(indices.size());
  for (size_t i = 0; i < indices.size(); ++i) {
    out[i] = labels[static_cast<size_t>(indices[i])];
  }
  return out;
}

namespace {

void load_split_into(LabeledImageSet& set, const fs::path& corpus_dir,
                     const std::string& split) {
  const fs::path split_dir = corpus_dir / split;
  const fs::path manifest = split_dir / "manifest.jsonl";
  if (!fs::exists(manifest)) {
    throw NotFoundError("dataset: missing manifest " + manifest.string());
  }
  std::ifstream in(manifest);
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw IntegrityError("dataset: bad manifest record at " +
                           manifest.string() + ":" + std::to_string(lineno) +
                           ": " + e.what());
    }
    const fs::path img_path = split_dir / rec.at("path").get<std::string>();
    imageio::ImageU8 img;
    try {
      img = imageio::read_ppm(img_path);
    } catch (const NotFoundError&) {
      throw IntegrityError("dataset: manifest names missing image " +
                           img_path.string());
    }
    if (img.height != set.height || img.width != set.width) {
      throw IntegrityError("dataset: image size mismatch in " +
                           img_path.string());
    }
    // Interleaved bytes -> planar CHW uint8.
    const size_t base = set.pixels.size();
    set.pixels.resize(base + set.image_elems());
    for (int ch = 0; ch < set.channels; ++ch) {
      for (int y = 0; y < set.height; ++y) {
        for (int x = 0; x < set.width; ++x) {
          set.pixels[base + (static_cast<size_t>(ch) * set.height + y) *
                                set.width +
                     x] =
              img.pixels[(static_cast<size_t>(y) * set.width + x) * 3 + ch];
        }
      }
    }
    if (rec.contains("label")) {
      const int label = rec["label"].get<int>();
      if (label < 0 || label >= set.num_classes) {
        throw IntegrityError("dataset: label " + std::to_string(label) +
                             " out of range in " + manifest.string() + ":" +
                             std::to_string(lineno));
      }
      set.labels.push_back(label);
      set.attrs.emplace_back();
    } else if (rec.contains("attrs")) {
      const auto bits = rec["attrs"].get<std::vector<uint8_t>>();
      if (bits.size() != set.attribute_names.size()) {
        throw IntegrityError("dataset: attrs length mismatch in " +
                             manifest.string() + ":" +
                             std::to_string(lineno));
      }
      set.attrs.push_back(bits);
      set.labels.push_back(0);  // placeholder until an attribute_view
    } else {
      throw IntegrityError("dataset: record with neither label nor attrs in " +
                           manifest.string() + ":" + std::to_string(lineno));
    }
  }
}

}  // namespace

LabeledImageSet load_dataset(const std::string& name, const fs::path& root,
                             const std::string& split) {
  if (split != "train" && split != "test" && split != "all") {
    throw ValidationError("dataset: split must be train, test or all");
  }
  if (!fs::exists(root)) {
    throw NotFoundError("dataset: root not found: " + root.string());
  }
  const fs::path corpus_dir = root / name;
  if (!fs::exists(corpus_dir)) {
    throw NotFoundError("dataset: corpus not found: " + corpus_dir.string());
  }
  const fs::path meta_path = corpus_dir / "corpus.json";
  if (!fs::exists(meta_path)) {
    throw NotFoundError("dataset: missing " + meta_path.string());
  }
  json meta;
  try {
    std::ifstream in(meta_path);
    in >> meta;
  } catch (const json::exception& e) {
    throw IntegrityError("dataset: bad corpus.json in " + meta_path.string() +
                         ": " + e.what());
  }

  LabeledImageSet set;
  set.name = name;
  set.split = split;
  set.height = meta.at("height").get<int>();
  set.width = meta.at("width").get<int>();
  set.channels = meta.at("channels").get<int>();
  set.num_classes = meta.value("num_classes", 0);
  if (meta.contains("attributes")) {
    set.attribute_names = meta["attributes"].get<std::vector<std::string>>();
  }

  if (split == "all") {
    load_split_into(set, corpus_dir, "train");
    load_split_into(set, corpus_dir, "test");
  } else {
    load_split_into(set, corpus_dir, split);
  }
  return set;
}

LabeledImageSet attribute_view(const LabeledImageSet& set,
                               const std::string& attribute) {
  size_t idx = set.attribute_names.size();
  for (size_t i = 0; i < set.attribute_names.size(); ++i) {
    if (set.attribute_names[i] == attribute) {
      idx = i;
      break;
    }
  }
  if (idx == set.attribute_names.size()) {
    std::string valid;
    for (const auto& a : set.attribute_names) {
      if (!valid.empty()) valid += ", ";
      valid += a;
    }
    throw ValidationError("attribute_view: unknown attribute '" + attribute +
                          "'; valid attributes: " + valid);
  }
  LabeledImageSet view = set;
  view.num_classes = 2;
  for (size_t i = 0; i < view.size(); ++i) {
    if (view.attrs[i].size() != set.attribute_names.size()) {
      throw ValidationError("attribute_view: image " + std::to_string(i) +
                            " has no attribute bits");
    }
    view.labels[i] = view.attrs[i][idx] ? 1 : 0;
  }
  return view;
}

std::vector<std::vector<int>> make_batches(size_t n, int batch_size,
                                           uint64_t seed) {
  if (batch_size <= 0) {
    throw ValidationError("make_batches: batch_size must be >= 1");
  }
  std::vector<int> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
  Rng rng(derive_seed({seed, hash_str("batches")}));
  rng.shuffle(order);
  std::vector<std::vector<int>> batches;
  for (size_t start = 0; start < n; start += batch_size) {
    const size_t end = std::min(n, start + static_cast<size_t>(batch_size));
    batches.emplace_back(order.begin() + start, order.begin() + end);
  }
  return batches;
}

std::vector<int> deterministic_subset(size_t n, size_t count, uint64_t seed) {
  std::vector<int> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
  Rng rng(derive_seed({seed, hash_str("subset")}));
  rng.shuffle(order);
  if (count < n) order.resize(count);
  return order;
}

}  // namespace semcom::data
