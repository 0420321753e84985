#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "semcom/privacy.hpp"
#include "semcom/rng.hpp"

using namespace semcom;
using namespace semcom::privacy;

namespace {

double l1(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += std::fabs(x);
  return s;
}

double l2(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

std::vector<double> random_vec(size_t n, uint64_t seed) {
  std::vector<double> v(n);
  Rng rng(seed);
  for (auto& x : v) x = rng.normal();
  return v;
}

}  // namespace

TEST_CASE("clip_l1 leaves small vectors unchanged and rescales large ones") {
  std::vector<double> small = {0.1, -0.2, 0.1};  // l1 = 0.4
  CHECK(clip_l1(small, 0.8) == small);
  std::vector<double> big = {1.0, -2.0, 1.0};  // l1 = 4
  auto clipped = clip_l1(big, 2.0);
  CHECK(l1(clipped) == doctest::Approx(2.0).epsilon(1e-12));
  std::vector<double> zero(4, 0.0);
  CHECK(clip_l1(zero, 1.0) == zero);
}

TEST_CASE("dp laplace scale is clip/epsilon and matches empirically") {
  DPConfig cfg;
  cfg.epsilon = 0.05;
  cfg.clip_bound = 1.0;
  CHECK(cfg.laplace_scale() == doctest::Approx(20.0));

  cfg.epsilon = 0.5;
  const double b = cfg.laplace_scale();
  std::vector<double> x(200000, 0.0);
  auto noisy = dp_perturb(x, cfg, 31337);
  double mad = 0.0;
  for (double v : noisy) mad += std::fabs(v);
  mad /= static_cast<double>(noisy.size());
  CHECK(mad == doctest::Approx(b).epsilon(0.02));
}

TEST_CASE("dp is deterministic under seed and epsilon must be positive") {
  DPConfig cfg;
  cfg.epsilon = 0.1;
  auto x = random_vec(64, 2);
  CHECK(dp_perturb(x, cfg, 9) == dp_perturb(x, cfg, 9));
  CHECK(dp_perturb(x, cfg, 9) != dp_perturb(x, cfg, 10));
  cfg.epsilon = 0.0;
  CHECK_THROWS_AS(dp_perturb(x, cfg, 9), ValidationError);
}

TEST_CASE("huge epsilon leaves the input nearly unchanged") {
  DPConfig cfg;
  cfg.epsilon = 1e6;
  cfg.clip_bound = 1.0;
  auto x = random_vec(4096, 3);
  auto y = dp_perturb(x, cfg, 77);
  double max_dev = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    max_dev = std::max(max_dev, std::fabs(x[i] - y[i]));
  }
  // tail bound: P(|Lap(b)| > t) = exp(-t/b); with b = 1e-6 and 4096 draws a
  // deviation above 1e-3 has probability under 4096 * e^-1000
  CHECK(max_dev < 1e-3);
}

TEST_CASE("epsilon-DP histogram ratio bound on a 2-dim toy") {
  // neighboring clipped inputs with ||x - x'||_1 = clip bound
  DPConfig cfg;
  cfg.epsilon = 0.5;
  cfg.clip_bound = 1.0;
  const std::vector<double> x = {0.5, -0.5};
  const std::vector<double> xp = {0.0, 0.0};
  const int n = 400000;
  const double lo = -4.0, hi = 4.0;
  const int bins = 8;  // coarse 2-d histogram over coordinate intervals
  std::map<int, int> hx, hxp;
  auto bin_of = [&](const std::vector<double>& v) {
    auto clampi = [&](double t) {
      int b = static_cast<int>((t - lo) / (hi - lo) * bins);
      return std::clamp(b, 0, bins - 1);
    };
    return clampi(v[0]) * bins + clampi(v[1]);
  };
  for (int i = 0; i < n; ++i) {
    hx[bin_of(dp_perturb(x, cfg, 1000 + i))] += 1;
    hxp[bin_of(dp_perturb(xp, cfg, 2000000 + i))] += 1;
  }
  const double bound = std::exp(cfg.epsilon);
  for (const auto& [bin, cx] : hx) {
    const int cxp = hxp.count(bin) ? hxp.at(bin) : 0;
    if (cx < 500 || cxp < 500) continue;  // skip bins with poor statistics
    const double ratio = static_cast<double>(cx) / cxp;
    CHECK(ratio <= bound * 1.08);
    CHECK(ratio >= 1.0 / (bound * 1.08));
  }
}

TEST_CASE("smaller epsilon never decreases the laplace scale") {
  DPConfig a, b;
  a.epsilon = 0.05;
  b.epsilon = 0.9;
  CHECK(a.laplace_scale() > b.laplace_scale());
}

TEST_CASE("shuffle encrypt/decrypt round-trip is bit-exact") {
  auto key = make_shuffle_key("0123456789abcdef0123456789abcdef", 128);
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    auto x = random_vec(128, 100 + trial);
    const uint64_t counter = rng.uniform_int(1 << 20);
    auto enc = shuffle_encrypt(x, key, counter);
    auto dec = shuffle_decrypt(enc, key, counter);
    CHECK(dec == x);
  }
}

TEST_CASE("encryption is norm preserving (same value multiset)") {
  auto key = make_shuffle_key("00000000000000000000000000000001", 64);
  auto x = random_vec(64, 7);
  auto enc = shuffle_encrypt(x, key, 3);
  auto xs = x, es = enc;
  std::sort(xs.begin(), xs.end());
  std::sort(es.begin(), es.end());
  CHECK(xs == es);  // bit-exact multiset equality implies exact norms
  CHECK(l2(enc) == doctest::Approx(l2(x)).epsilon(1e-12));
}

TEST_CASE("d=1 shuffling is the identity") {
  auto key = make_shuffle_key("0123456789abcdef0123456789abcdef", 1);
  std::vector<double> x = {3.14};
  CHECK(shuffle_encrypt(x, key, 0) == x);
}

TEST_CASE("distinct keys give distinct permutations") {
  int collisions = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    char k1[33], k2[33];
    std::snprintf(k1, sizeof(k1), "%032x", trial * 2 + 1);
    std::snprintf(k2, sizeof(k2), "%032x", trial * 2 + 2);
    auto a = make_shuffle_key(k1, 64).permutation();
    auto b = make_shuffle_key(k2, 64).permutation();
    if (a == b) ++collisions;
  }
  CHECK(collisions == 0);
}

TEST_CASE("counter-mode: different counters give different permutations") {
  auto key = make_shuffle_key("0123456789abcdef0123456789abcdef", 64);
  CHECK(permutation_for(key, 0) != permutation_for(key, 1));
  CHECK(permutation_for(key, 0) == permutation_for(key, 0));
}

TEST_CASE("length mismatch rejected") {
  auto key = make_shuffle_key("0123456789abcdef0123456789abcdef", 64);
  CHECK_THROWS_AS(shuffle_encrypt(random_vec(32, 1), key), ValidationError);
}

TEST_CASE("vq_quantize picks exact matches with zero error") {
  Codebook cb;
  cb.K = 4;
  cb.seg_dim = 2;
  cb.codewords = {0, 0, 1, 1, -1, 2, 3, -3};
  std::vector<double> feat = {1, 1, -1, 2};
  auto r = vq_quantize(feat, cb);
  CHECK(r.indices == std::vector<int>{1, 2});
  CHECK(r.quantized == feat);
}

TEST_CASE("vq tie-break selects the lowest index") {
  Codebook cb;
  cb.K = 8;
  cb.seg_dim = 1;
  cb.codewords = {10, 10, -1, 10, 10, -1, 10, 10};  // 2 and 5 equidistant to 0
  std::vector<double> feat = {0.0};
  auto r = vq_quantize(feat, cb);
  CHECK(r.indices[0] == 2);
}

TEST_CASE("vq matches exhaustive nearest-neighbor search on random segments") {
  Codebook cb;
  cb.K = 16;
  cb.seg_dim = 4;
  cb.codewords = random_vec(16 * 4, 9);
  for (int trial = 0; trial < 200; ++trial) {
    auto feat = random_vec(4, 1000 + trial);
    auto r = vq_quantize(feat, cb);
    // brute force oracle
    int best = -1;
    double best_d = 1e300;
    for (int k = 0; k < 16; ++k) {
      double dist = 0.0;
      for (int j = 0; j < 4; ++j) {
        const double diff = feat[j] - cb.codewords[k * 4 + j];
        dist += diff * diff;
      }
      if (dist < best_d) {
        best = k;
        best_d = dist;
      }
    }
    CHECK(r.indices[0] == best);
  }
}

TEST_CASE("vq indices are invariant to joint positive scaling") {
  Codebook cb;
  cb.K = 16;
  cb.seg_dim = 4;
  cb.codewords = random_vec(16 * 4, 13);
  auto feat = random_vec(128, 17);
  auto base = vq_quantize(feat, cb);
  Codebook scaled = cb;
  for (auto& v : scaled.codewords) v *= 3.7;
  auto sfeat = feat;
  for (auto& v : sfeat) v *= 3.7;
  auto r = vq_quantize(sfeat, scaled);
  CHECK(r.indices == base.indices);
}

TEST_CASE("vq divisibility violation rejected") {
  Codebook cb;
  cb.K = 16;
  cb.seg_dim = 3;
  cb.codewords.assign(48, 0.0);
  CHECK_THROWS_AS(vq_quantize(random_vec(128, 1), cb), ValidationError);
}

TEST_CASE("vq_loss is zero iff features equal codewords, beta scales") {
  Codebook cb;
  cb.K = 4;
  cb.seg_dim = 2;
  cb.codewords = {0, 0, 1, 1, 2, 2, 3, 3};
  Tensor z({1, 4}, {1, 1, 2, 2});
  auto q = vq_quantize_batch(z, cb);
  auto l = vq_loss(z, q.quantized, q.indices, cb);
  CHECK(l.loss == doctest::Approx(0.0));

  Tensor z2({1, 4}, {1.5, 1.0, 2.0, 2.5});
  auto q2 = vq_quantize_batch(z2, cb);
  auto l2r = vq_loss(z2, q2.quantized, q2.indices, cb);
  CHECK(l2r.loss > 0.0);
  Codebook nob = cb;
  nob.commitment_beta = 0.0;
  auto l3 = vq_loss(z2, q2.quantized, q2.indices, nob);
  CHECK(l3.loss == doctest::Approx(l3.codebook_term));
}

TEST_CASE("apply_mechanism dispatch and length contracts") {
  auto feat = random_vec(128, 23);
  // none -> normalized identity
  auto none = apply_mechanism(feat, NoMechanism{}, Mode::kEval, 1, 0);
  CHECK(!none.digital);
  CHECK(none.analog.size() == 128);
  // ibal -> identity at apply time
  IBALConfig ib;
  auto ibal = apply_mechanism(feat, ib, Mode::kEval, 1, 0);
  CHECK(ibal.analog == none.analog);
  // dp twice with same seed -> identical
  DPConfig dp;
  dp.epsilon = 0.1;
  auto d1 = apply_mechanism(feat, dp, Mode::kEval, 5, 0);
  auto d2 = apply_mechanism(feat, dp, Mode::kEval, 5, 0);
  CHECK(d1.analog == d2.analog);
  // lbvq: 128/4 = 32 indices, 4 bits each for K=16
  Codebook cb;
  cb.K = 16;
  cb.seg_dim = 4;
  cb.codewords = random_vec(64, 29);
  auto vq = apply_mechanism(feat, cb, Mode::kEval, 1, 0);
  CHECK(vq.digital);
  CHECK(vq.indices.size() == 32);
  CHECK(cb.bits_per_index() == 4);
  // encryption preserves length
  auto key = make_shuffle_key("0123456789abcdef0123456789abcdef", 128);
  auto enc = apply_mechanism(feat, key, Mode::kEval, 1, 7);
  CHECK(enc.analog.size() == 128);
}

TEST_CASE("clip_l1 backward matches finite differences") {
  auto x = random_vec(16, 31);
  for (auto& v : x) v *= 2.0;  // make sure clipping is active
  const double bound = 1.0;
  auto g = random_vec(16, 37);
  auto analytic = clip_l1_backward(x, bound, g);
  const double h = 1e-6;
  for (size_t i = 0; i < x.size(); ++i) {
    auto xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    auto yp = clip_l1(xp, bound), ym = clip_l1(xm, bound);
    double num = 0.0;
    for (size_t j = 0; j < x.size(); ++j) {
      num += g[j] * (yp[j] - ym[j]) / (2.0 * h);
    }
    CHECK(num == doctest::Approx(analytic[i]).epsilon(1e-4));
  }
}

TEST_CASE("shuffle key parsing validates hex") {
  CHECK_THROWS_AS(make_shuffle_key("xyz", 8), ValidationError);
  CHECK_THROWS_AS(make_shuffle_key("0123456789abcdef0123456789abcdeg", 8),
                  ValidationError);
}
