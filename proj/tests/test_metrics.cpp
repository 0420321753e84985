#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "semcom/metrics.hpp"
#include "semcom/rng.hpp"

using namespace semcom;
using namespace semcom::metrics;

TEST_CASE("accuracy closed forms and validation") {
  Tensor logits({4, 3});
  logits.row(0)[1] = 5.0;
  logits.row(1)[0] = 5.0;
  logits.row(2)[2] = 5.0;
  logits.row(3)[1] = 5.0;
  CHECK(accuracy(logits, {1, 0, 2, 1}) == doctest::Approx(1.0));
  CHECK(accuracy(logits, {1, 0, 2, 0}) == doctest::Approx(0.75));
  CHECK_THROWS_AS(accuracy(Tensor({0, 3}), {}), ValidationError);
}

TEST_CASE("binary head accuracy uses the sign of the logit") {
  Tensor logits({4, 1}, {2.0, -1.0, 0.5, -0.2});
  CHECK(accuracy(logits, {1, 0, 1, 0}) == doctest::Approx(1.0));
  CHECK(accuracy(logits, {0, 1, 0, 1}) == doctest::Approx(0.0));
}

TEST_CASE("random predictions sit at chance level") {
  const int n = 100000, k = 10;
  Tensor logits({static_cast<size_t>(n), static_cast<size_t>(k)});
  Rng rng(3);
  for (auto& v : logits.data) v = rng.normal();
  std::vector<int> labels(n);
  for (auto& l : labels) l = static_cast<int>(rng.uniform_int(k));
  CHECK(accuracy(logits, labels) == doctest::Approx(0.1).epsilon(0.1));
}

TEST_CASE("accuracy is invariant under consistent relabeling") {
  Rng rng(5);
  const int n = 500, k = 6;
  Tensor logits({static_cast<size_t>(n), static_cast<size_t>(k)});
  for (auto& v : logits.data) v = rng.normal();
  std::vector<int> labels(n);
  for (auto& l : labels) l = static_cast<int>(rng.uniform_int(k));
  const double base = accuracy(logits, labels);
  // apply a bijection to both prediction space and labels
  std::vector<int> perm = {3, 0, 5, 1, 2, 4};
  Tensor permuted({static_cast<size_t>(n), static_cast<size_t>(k)});
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j) {
      permuted.row(i)[perm[j]] = logits.row(i)[j];
    }
  }
  std::vector<int> plabels(n);
  for (int i = 0; i < n; ++i) plabels[i] = perm[labels[i]];
  CHECK(accuracy(permuted, plabels) == doctest::Approx(base));
}

TEST_CASE("psnr closed forms") {
  Tensor a({1, 1, 2, 2}, {0.1, 0.2, 0.3, 0.4});
  CHECK(std::isinf(psnr(a, a)));
  Tensor black({1, 1, 2, 2}, {0, 0, 0, 0});
  Tensor white({1, 1, 2, 2}, {1, 1, 1, 1});
  CHECK(psnr(black, white) == doctest::Approx(0.0));
  // mse 0.01 -> 20 dB
  Tensor b = a;
  for (auto& v : b.data) v += 0.1;
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-9));
  Tensor wrong({1, 1, 1, 4}, {0, 0, 0, 0});
  CHECK_THROWS_AS(psnr(a, wrong), ValidationError);
}

TEST_CASE("mi estimator: independent pairs stay at zero") {
  MiEstimatorConfig cfg;
  cfg.proj_hw = 4;
  cfg.steps = 1200;
  cfg.min_pairs = 1000;
  cfg.eval_product_samples = 100000;
  const size_t n = 3000;
  Tensor x({n, 16}), y({n, 16});
  Rng rng(11);
  for (auto& v : x.data) v = rng.normal();
  for (auto& v : y.data) v = rng.normal();
  const double mi = mi_leakage_vectors(x, y, cfg, 7);
  CHECK(mi <= 0.05);
  CHECK(mi >= -0.05);
}

TEST_CASE("mi estimator: 4-symbol discrete oracle gives ln 4") {
  MiEstimatorConfig cfg;
  cfg.steps = 1500;
  cfg.min_pairs = 1000;
  cfg.eval_product_samples = 100000;
  // X = Y uniform over 4 distinct 8x8 images
  Rng rng(13);
  Tensor symbols({4, 1, 8, 8});
  for (auto& v : symbols.data) v = rng.uniform();
  const size_t n = 4000;
  Tensor x({n, 1, 8, 8}), y({n, 1, 8, 8});
  for (size_t i = 0; i < n; ++i) {
    const size_t s = rng.uniform_int(4);
    std::copy_n(symbols.row(s), 64, x.row(i));
    std::copy_n(symbols.row(s), 64, y.row(i));
  }
  MiEstimatorConfig img_cfg = cfg;
  img_cfg.proj_hw = 8;
  const double mi = mi_leakage(x, y, img_cfg, 17);
  CHECK(mi == doctest::Approx(std::log(4.0)).epsilon(0.15));
}

TEST_CASE("mi estimator: correlated gaussians track the closed form") {
  // rho = 0.9 per dimension, 16 dims: MI = -16/2 ln(1 - rho^2)
  MiEstimatorConfig cfg;
  cfg.steps = 4000;
  cfg.min_pairs = 1000;
  cfg.eval_product_samples = 400000;
  const double rho = 0.9;
  const size_t n = 6000, d = 16;
  Tensor x({n, d}), y({n, d});
  Rng rng(19);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j < d; ++j) {
      const double a = rng.normal();
      x.row(i)[j] = a;
      y.row(i)[j] = rho * a + std::sqrt(1.0 - rho * rho) * rng.normal();
    }
  }
  const double truth = -0.5 * d * std::log(1.0 - rho * rho);
  const double mi = mi_leakage_vectors(x, y, cfg, 23);
  CHECK(mi == doctest::Approx(truth).epsilon(0.15));
}

TEST_CASE("mi estimator: too few pairs rejected, permutation invariance") {
  MiEstimatorConfig cfg;
  cfg.min_pairs = 1000;
  Tensor x({10, 4}), y({10, 4});
  CHECK_THROWS_AS(mi_leakage_vectors(x, y, cfg, 1), ValidationError);
}
