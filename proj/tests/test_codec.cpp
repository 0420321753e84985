#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "semcom/channel.hpp"
#include "semcom/codec.hpp"
#include "semcom/rng.hpp"
#include "semcom/training.hpp"

using namespace semcom;
using namespace semcom::codec;
namespace fs = std::filesystem;

namespace {

Tensor random_images(size_t n, int c, int h, int w, uint64_t seed) {
  Tensor t({n, static_cast<size_t>(c), static_cast<size_t>(h),
            static_cast<size_t>(w)});
  Rng rng(seed);
  for (auto& v : t.data) v = rng.uniform();
  return t;
}

BuildOptions base_options(Scheme scheme) {
  BuildOptions opt;
  opt.scheme = scheme;
  opt.spec.in_c = 3;
  opt.spec.in_h = 32;
  opt.spec.in_w = 32;
  opt.head.num_classes = 10;
  opt.shuffle_key_hex = "0123456789abcdef0123456789abcdef";
  return opt;
}

}  // namespace

TEST_CASE("encode returns length-d power-normalized rows") {
  SchemeModel m = build_scheme_model(base_options(Scheme::kBaseline));
  m.init_params(1);
  Tensor imgs = random_images(5, 3, 32, 32, 2);
  Tensor feats = encode(m, imgs);
  CHECK(feats.rows() == 5);
  CHECK(feats.row_size() == 128);
  for (size_t i = 0; i < 5; ++i) {
    double p = 0.0;
    for (size_t j = 0; j < 128; ++j) p += feats.row(i)[j] * feats.row(i)[j];
    CHECK(p / 64.0 == doctest::Approx(1.0).epsilon(1e-9));  // per-symbol power
  }
}

TEST_CASE("batch encode equals per-image encode row-wise") {
  SchemeModel m = build_scheme_model(base_options(Scheme::kBaseline));
  m.init_params(3);
  Tensor imgs = random_images(4, 3, 32, 32, 5);
  Tensor batch = encode(m, imgs);
  for (size_t i = 0; i < 4; ++i) {
    Tensor one({1, 3, 32, 32});
    std::copy_n(imgs.row(i), one.numel(), one.data.data());
    Tensor fi = encode(m, one);
    for (size_t j = 0; j < 128; ++j) {
      CHECK(fi.data[j] == doctest::Approx(batch.row(i)[j]).epsilon(1e-9));
    }
  }
}

TEST_CASE("encode rejects shape mismatches") {
  SchemeModel m = build_scheme_model(base_options(Scheme::kBaseline));
  m.init_params(1);
  Tensor wrong = random_images(2, 3, 16, 16, 7);
  CHECK_THROWS_AS(encode(m, wrong), ValidationError);
}

TEST_CASE("untrained encoder with fixed seed is deterministic") {
  SchemeModel a = build_scheme_model(base_options(Scheme::kBaseline));
  SchemeModel b = build_scheme_model(base_options(Scheme::kBaseline));
  a.init_params(11);
  b.init_params(11);
  Tensor imgs = random_images(2, 3, 32, 32, 13);
  CHECK(encode(a, imgs).data == encode(b, imgs).data);
}

TEST_CASE("infer_task arity for multiclass and binary heads") {
  SchemeModel m = build_scheme_model(base_options(Scheme::kBaseline));
  m.init_params(1);
  Tensor feats({2, 128});
  Rng rng(17);
  for (auto& v : feats.data) v = rng.normal();
  Tensor logits = infer_task(m, feats);
  CHECK(logits.row_size() == 10);
  CHECK(infer_task(m, feats).data == logits.data);  // purity in eval mode

  BuildOptions bopt = base_options(Scheme::kBaseline);
  bopt.head.binary = true;
  SchemeModel mb = build_scheme_model(bopt);
  mb.init_params(1);
  CHECK(infer_task(mb, feats).row_size() == 1);

  Tensor bad({2, 64});
  CHECK_THROWS_AS(infer_task(m, bad), ValidationError);
}

TEST_CASE("task loss closed forms") {
  Tensor logits({1, 10});
  auto lg = train::task_loss(TaskHeadSpec{false, 10}, logits, {3});
  CHECK(lg.loss == doctest::Approx(std::log(10.0)));
}

TEST_CASE("bundle round-trips bit-exactly for every scheme") {
  for (Scheme s : {Scheme::kBaseline, Scheme::kDp, Scheme::kEncryption,
                   Scheme::kIbal, Scheme::kLbvq}) {
    BuildOptions opt = base_options(s);
    opt.remap_hidden = 64;  // keep the test light
    SchemeModel m = build_scheme_model(opt);
    m.init_params(derive_seed({static_cast<uint64_t>(s), 1}));
    if (s == Scheme::kLbvq) {
      auto& cb = std::get<privacy::Codebook>(m.mechanism);
      Rng rng(5);
      for (auto& v : cb.codewords) v = rng.normal();
    }
    m.meta = {{"scheme", scheme_to_string(s)}, {"note", "test"}};
    const fs::path p = fs::temp_directory_path() /
                       ("semcom-bundle-" + scheme_to_string(s));
    save_bundle(p, m);
    SchemeModel back = load_bundle(p);
    CHECK(back.scheme == m.scheme);
    auto na = m.named_nets();
    auto nb = back.named_nets();
    REQUIRE(na.size() == nb.size());
    for (size_t i = 0; i < na.size(); ++i) {
      auto pa = na[i].second->params();
      auto pb = nb[i].second->params();
      REQUIRE(pa.size() == pb.size());
      for (size_t j = 0; j < pa.size(); ++j) {
        CHECK(pa[j]->value == pb[j]->value);
      }
    }
    if (s == Scheme::kLbvq) {
      CHECK(std::get<privacy::Codebook>(back.mechanism).codewords ==
            std::get<privacy::Codebook>(m.mechanism).codewords);
    }
    if (s == Scheme::kEncryption) {
      CHECK(std::get<privacy::ShuffleKey>(back.mechanism).permutation() ==
            std::get<privacy::ShuffleKey>(m.mechanism).permutation());
    }
    CHECK(back.meta.at("note") == "test");

    // loaded bundle reproduces the transmission pipeline exactly
    Tensor imgs = random_images(3, 3, 32, 32, 99);
    auto ta = transmit_batch(m, imgs, 12.0, 7, 0);
    auto tb = transmit_batch(back, imgs, 12.0, 7, 0);
    CHECK(ta.head_in.data == tb.head_in.data);
  }
}

TEST_CASE("transmit_batch shapes and determinism per scheme") {
  for (Scheme s : {Scheme::kBaseline, Scheme::kDp, Scheme::kEncryption,
                   Scheme::kIbal, Scheme::kLbvq}) {
    BuildOptions opt = base_options(s);
    opt.remap_hidden = 64;
    SchemeModel m = build_scheme_model(opt);
    m.init_params(21);
    if (s == Scheme::kLbvq) {
      auto& cb = std::get<privacy::Codebook>(m.mechanism);
      Rng rng(5);
      for (auto& v : cb.codewords) v = rng.normal();
    }
    Tensor imgs = random_images(4, 3, 32, 32, 23);
    auto r1 = transmit_batch(m, imgs, 12.0, 31, 0);
    auto r2 = transmit_batch(m, imgs, 12.0, 31, 0);
    CHECK(r1.head_in.data == r2.head_in.data);
    CHECK(r1.head_in.row_size() == 128);
    if (s == Scheme::kLbvq) {
      CHECK(r1.digital);
      CHECK(r1.segs_per_row == 32);
      CHECK(r1.intercepted_indices.size() == 4 * 32);
      CHECK(r1.intercepted_indices == r2.intercepted_indices);
    } else {
      CHECK(!r1.digital);
      CHECK(r1.intercepted_analog.rows() == 4);
    }
    // different channel seed changes the received features
    auto r3 = transmit_batch(m, imgs, 12.0, 32, 0);
    CHECK(r1.head_in.data != r3.head_in.data);
  }
}

TEST_CASE("noiseless encryption transmission decrypts to the channel input") {
  BuildOptions opt = base_options(Scheme::kEncryption);
  SchemeModel m = build_scheme_model(opt);
  m.init_params(41);
  Tensor imgs = random_images(2, 3, 32, 32, 43);
  auto res = transmit_batch(m, imgs, channel::kNoiselessSnrDb, 1, 5);
  // head input must equal the normalized features exactly
  Tensor feats = encode(m, imgs);
  for (size_t i = 0; i < feats.data.size(); ++i) {
    CHECK(res.head_in.data[i] == doctest::Approx(feats.data[i]).epsilon(1e-12));
  }
  // while the intercepted (permuted) view differs from the features
  CHECK(res.intercepted_analog.data != res.head_in.data);
}

TEST_CASE("serialization: save -> load -> re-evaluate reproduces logits") {
  BuildOptions opt = base_options(Scheme::kBaseline);
  SchemeModel m = build_scheme_model(opt);
  m.init_params(51);
  Tensor imgs = random_images(16, 3, 32, 32, 53);
  auto t1 = transmit_batch(m, imgs, 12.0, 5, 0);
  Tensor l1 = infer_task(m, t1.head_in);
  const fs::path p = fs::temp_directory_path() / "semcom-bundle-acc";
  save_bundle(p, m);
  SchemeModel back = load_bundle(p);
  auto t2 = transmit_batch(back, imgs, 12.0, 5, 0);
  Tensor l2 = infer_task(back, t2.head_in);
  CHECK(l1.data == l2.data);
}
