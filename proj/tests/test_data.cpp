#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <set>

#include "semcom/datagen.hpp"
#include "semcom/dataset.hpp"
#include "semcom/image_io.hpp"

using namespace semcom;
namespace fs = std::filesystem;

namespace {

// one tiny corpus per test binary run, shared across cases
const fs::path& tiny_root() {
  static const fs::path root = [] {
    const fs::path r = fs::temp_directory_path() / "semcom-test-data";
    fs::remove_all(r);
    datagen::GenOptions opt;
    opt.train_count = 60;
    opt.test_count = 20;
    opt.seed = 5;
    datagen::generate_corpus("cifar10", r, opt);
    datagen::GenOptions fopt;
    fopt.train_count = 40;
    fopt.test_count = 10;
    fopt.seed = 5;
    datagen::generate_corpus("celeba", r, fopt);
    return r;
  }();
  return root;
}

}  // namespace

TEST_CASE("load_dataset returns the requested split with valid labels") {
  auto set = data::load_dataset("cifar10", tiny_root(), "train");
  CHECK(set.size() == 60);
  CHECK(set.num_classes == 10);
  CHECK(set.height == 32);
  for (int label : set.labels) {
    CHECK(label >= 0);
    CHECK(label < 10);
  }
  auto all = data::load_dataset("cifar10", tiny_root(), "all");
  CHECK(all.size() == 80);
}

TEST_CASE("missing root raises a not-found error") {
  CHECK_THROWS_AS(data::load_dataset("cifar10", "/nonexistent-root", "train"),
                  NotFoundError);
  CHECK_THROWS_AS(data::load_dataset("nope", tiny_root(), "train"),
                  NotFoundError);
}

TEST_CASE("corrupt image file raises an integrity error naming the file") {
  const fs::path r = fs::temp_directory_path() / "semcom-test-corrupt";
  fs::remove_all(r);
  datagen::GenOptions opt;
  opt.train_count = 4;
  opt.test_count = 2;
  datagen::generate_corpus("cifar10", r, opt);
  // truncate one image
  const fs::path victim = r / "cifar10" / "train" / "images" / "000001.ppm";
  std::filesystem::resize_file(victim, 10);
  try {
    data::load_dataset("cifar10", r, "train");
    CHECK(false);
  } catch (const IntegrityError& e) {
    CHECK(std::string(e.what()).find("000001.ppm") != std::string::npos);
  }
}

TEST_CASE("pixels load into [0,1] byte-identically across loads") {
  auto a = data::load_dataset("cifar10", tiny_root(), "train");
  auto b = data::load_dataset("cifar10", tiny_root(), "train");
  CHECK(a.pixels == b.pixels);
  CHECK(a.labels == b.labels);
  std::vector<double> img(a.image_elems());
  a.image_as_double(0, img.data());
  for (double v : img) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("attribute_view relabels without touching image bytes") {
  auto faces = data::load_dataset("celeba", tiny_root(), "train");
  auto smiling = data::attribute_view(faces, "Smiling");
  CHECK(smiling.size() == faces.size());
  CHECK(smiling.num_classes == 2);
  CHECK(smiling.pixels == faces.pixels);
  for (int l : smiling.labels) CHECK((l == 0 || l == 1));

  auto mustache = data::attribute_view(faces, "Mustache");
  CHECK(mustache.size() == faces.size());

  // idempotent per attribute
  auto twice = data::attribute_view(smiling, "Smiling");
  CHECK(twice.labels == smiling.labels);
  CHECK(twice.pixels == smiling.pixels);
}

TEST_CASE("unknown attribute lists the valid names") {
  auto faces = data::load_dataset("celeba", tiny_root(), "train");
  try {
    data::attribute_view(faces, "EyeColor");
    CHECK(false);
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("EyeColor") != std::string::npos);
    CHECK(msg.find("Smiling") != std::string::npos);
  }
}

TEST_CASE("make_batches covers every index exactly once") {
  auto batches = data::make_batches(60000, 512, 9);
  CHECK(batches.size() == 118);
  CHECK(batches.back().size() == 96);
  std::set<int> seen;
  size_t total = 0;
  for (const auto& b : batches) {
    for (int i : b) seen.insert(i);
    total += b.size();
  }
  CHECK(total == 60000);
  CHECK(seen.size() == 60000);
}

TEST_CASE("make_batches: n items with batch n is a single batch") {
  auto batches = data::make_batches(100, 100, 1);
  CHECK(batches.size() == 1);
}

TEST_CASE("make_batches is deterministic in the seed") {
  auto a = data::make_batches(1000, 128, 4);
  auto b = data::make_batches(1000, 128, 4);
  auto c = data::make_batches(1000, 128, 5);
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("batch_size must be positive") {
  CHECK_THROWS_AS(data::make_batches(10, 0, 1), ValidationError);
  CHECK_THROWS_AS(data::make_batches(10, -3, 1), ValidationError);
}

TEST_CASE("generator is deterministic under seed") {
  const fs::path r1 = fs::temp_directory_path() / "semcom-gen-a";
  const fs::path r2 = fs::temp_directory_path() / "semcom-gen-b";
  fs::remove_all(r1);
  fs::remove_all(r2);
  datagen::GenOptions opt;
  opt.train_count = 6;
  opt.test_count = 2;
  opt.seed = 11;
  datagen::generate_corpus("cifar10", r1, opt);
  datagen::generate_corpus("cifar10", r2, opt);
  auto a = data::load_dataset("cifar10", r1, "train");
  auto b = data::load_dataset("cifar10", r2, "train");
  CHECK(a.pixels == b.pixels);
}

TEST_CASE("ppm grid writer produces a readable image") {
  Tensor imgs({3, 3, 8, 8});
  for (size_t i = 0; i < imgs.data.size(); ++i) {
    imgs.data[i] = (i % 7) / 7.0;
  }
  const fs::path p = fs::temp_directory_path() / "semcom-grid.ppm";
  imageio::write_grid(p, imgs, 2);
  auto img = imageio::read_ppm(p);
  CHECK(img.width == 2 * 8 + 3 * 2);
  CHECK(img.height == 2 * 8 + 3 * 2);
}
