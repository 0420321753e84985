#pragma once

// Corpus ingestion: manifest-driven image sets, single-attribute label views
// for the face task, and deterministic batch iteration.
//
// Dataset root layout (one directory per corpus under the root):
//   <root>/<corpus>/corpus.json            {"name","height","width","channels",
//                                           "num_classes","attributes":[...]}
//   <root>/<corpus>/<split>/manifest.jsonl one JSON object per line:
//                                          {"path":"images/000000.ppm","label":3}
//                                       or {"path":..., "attrs":[0,1,...]}
//   <root>/<corpus>/<split>/images/*.ppm
// Splits are "train" and "test"; load_dataset also accepts "all" which is
// train followed by test.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "semcom/tensor.hpp"

namespace semcom::data {

struct LabeledImageSet {
  std::string name;
  std::string split;
  int height = 0;
  int width = 0;
  int channels = 0;
  int num_classes = 0;
  // Pixels stay uint8 in memory; accessors expose [0,1] doubles.
  std::vector<uint8_t> pixels;  // n * channels * height * width, planar CHW
  std::vector<int> labels;
  std::vector<std::string> attribute_names;
  std::vector<std::vector<uint8_t>> attrs;  // per-image attribute bits

  size_t size() const { return labels.size(); }
  size_t image_elems() const {
    return static_cast<size_t>(channels) * height * width;
  }
  const uint8_t* image_u8(size_t i) const {
    return pixels.data() + i * image_elems();
  }
  // One image as a (c, h, w) double block in [0,1].
  void image_as_double(size_t i, double* out) const;
  // (n, c, h, w) batch for the given indices.
  Tensor gather(const std::vector<int>& indices) const;
  std::vector<int> gather_labels(const std::vector<int>& indices) const;
};

LabeledImageSet load_dataset(const std::string& name,
                             const std::filesystem::path& root,
                             const std::string& split);

// Binary label view for one annotated attribute; images are untouched and
// the attribute table is preserved, so the operation is idempotent.
LabeledImageSet attribute_view(const LabeledImageSet& set,
                               const std::string& attribute);

// Deterministic shuffled index batches. Every batch has batch_size items
// except possibly the last.
std::vector<std::vector<int>> make_batches(size_t n, int batch_size,
                                           uint64_t seed);

// Deterministic subset of the first `count` indices of a seeded shuffle;
// used by the desk-scale presets.
std::vector<int> deterministic_subset(size_t n, size_t count, uint64_t seed);

}  // namespace semcom::data
