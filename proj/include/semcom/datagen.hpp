#pragma once

// Deterministic procedural corpora in the documented dataset layout. The
// benchmark ships its own desk-scale image corpora so runs are reproducible
// and self-contained: a 10-class 32x32 texture/shape corpus for the
// classification task and a 64x64 parametric face corpus with the standard
// 40 attribute annotations for the attribute-recognition task.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace semcom::datagen {

struct GenOptions {
  size_t train_count = 0;  // 0 = corpus default
  size_t test_count = 0;
  uint64_t seed = 7;
};

// kind is "cifar10" (defaults 50000/10000) or "celeba" (defaults 20000/4000).
// Writes <root>/<kind>/{corpus.json, train/..., test/...}. Existing files
// are overwritten.
void generate_corpus(const std::string& kind,
                     const std::filesystem::path& root, const GenOptions& opt);

// The 40 face attribute names, in manifest bit order.
const std::vector<std::string>& face_attribute_names();

}  // namespace semcom::datagen
