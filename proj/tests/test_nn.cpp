#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>

#include "semcom/nn.hpp"
#include "semcom/rng.hpp"

using namespace semcom;
using namespace semcom::nn;

namespace {

Tensor random_tensor(std::vector<size_t> shape, uint64_t seed,
                     double scale = 1.0) {
  Tensor t(std::move(shape));
  Rng rng(seed);
  for (auto& v : t.data) v = scale * rng.normal();
  return t;
}

// Scalar objective: weighted sum of the layer output with fixed random
// weights. Checks input and parameter gradients against central finite
// differences.
void gradcheck_layer(Layer& layer, Tensor x, double tol = 1e-6) {
  Tensor w;
  {
    Tensor probe = layer.forward(x, true);
    w = random_tensor(probe.shape, 999);
  }
  auto objective = [&]() {
    Tensor y = layer.forward(x, true);
    double s = 0.0;
    for (size_t i = 0; i < y.data.size(); ++i) s += y.data[i] * w.data[i];
    return s;
  };
  // analytic grads
  for (auto* p : layer.params()) p->zero_grad();
  Tensor y = layer.forward(x, true);
  Tensor gy = w;
  Tensor gx = layer.backward(gy);

  const double h = 1e-5;
  // input gradient
  for (size_t i = 0; i < x.data.size(); ++i) {
    const double orig = x.data[i];
    x.data[i] = orig + h;
    const double fp = objective();
    x.data[i] = orig - h;
    const double fm = objective();
    x.data[i] = orig;
    const double num = (fp - fm) / (2.0 * h);
    const double denom = std::max({std::fabs(num), std::fabs(gx.data[i]), 1e-4});
    CHECK(std::fabs(num - gx.data[i]) / denom < tol * 1e3);
  }
  // parameter gradients (sampled to keep runtime sane)
  for (auto* p : layer.params()) {
    Rng pick(hash_str(p->name.c_str()));
    const size_t samples = std::min<size_t>(p->size(), 40);
    for (size_t s = 0; s < samples; ++s) {
      const size_t i = pick.uniform_int(p->size());
      const double orig = p->value[i];
      p->value[i] = orig + h;
      const double fp = objective();
      p->value[i] = orig - h;
      const double fm = objective();
      p->value[i] = orig;
      const double num = (fp - fm) / (2.0 * h);
      const double denom =
          std::max({std::fabs(num), std::fabs(p->grad[i]), 1e-4});
      CHECK(std::fabs(num - p->grad[i]) / denom < tol * 1e3);
    }
  }
}

}  // namespace

TEST_CASE("linear gradcheck") {
  Linear layer(11, 7);
  layer.init(*std::make_unique<Rng>(3));
  gradcheck_layer(layer, random_tensor({5, 11}, 17));
}

TEST_CASE("conv2d gradcheck (stride 2, pad 1)") {
  Conv2d layer(2, 3, 3, 2, 1);
  Rng rng(4);
  layer.init(rng);
  gradcheck_layer(layer, random_tensor({2, 2, 6, 6}, 19));
}

TEST_CASE("conv2d gradcheck (stride 1)") {
  Conv2d layer(3, 2, 3, 1, 1);
  Rng rng(5);
  layer.init(rng);
  gradcheck_layer(layer, random_tensor({2, 3, 5, 5}, 23));
}

TEST_CASE("activation gradchecks") {
  // inputs shifted away from the ReLU kink so finite differences are clean
  auto x = random_tensor({4, 9}, 29);
  for (auto& v : x.data) {
    if (std::fabs(v) < 0.05) v += 0.1;
  }
  ReLU relu;
  gradcheck_layer(relu, x);
  LeakyReLU lrelu(0.2);
  gradcheck_layer(lrelu, x);
  Sigmoid sig;
  gradcheck_layer(sig, x);
  Elu elu;
  gradcheck_layer(elu, x);
}

TEST_CASE("upsample and reshape gradchecks") {
  NearestUpsample2x up;
  gradcheck_layer(up, random_tensor({2, 3, 4, 4}, 31));
  Flatten fl;
  gradcheck_layer(fl, random_tensor({2, 3, 4, 4}, 37));
  Reshape rs(2, 4, 4);
  gradcheck_layer(rs, random_tensor({3, 32}, 41));
}

TEST_CASE("row power norm gradcheck") {
  RowPowerNorm norm;
  gradcheck_layer(norm, random_tensor({3, 8}, 43));
}

TEST_CASE("softmax cross entropy: closed forms and gradcheck") {
  // uniform logits over 10 classes -> ln 10
  Tensor logits({4, 10});
  std::vector<int> labels = {0, 3, 9, 5};
  auto lg = softmax_cross_entropy(logits, labels);
  CHECK(lg.loss == doctest::Approx(std::log(10.0)).epsilon(1e-12));

  // one-hot-matching extreme logits -> loss -> 0
  Tensor extreme({2, 10});
  for (int i = 0; i < 2; ++i) extreme.row(i)[i] = 50.0;
  auto lg2 = softmax_cross_entropy(extreme, {0, 1});
  CHECK(lg2.loss < 1e-9);

  // gradient vs central differences on random 10-dim logits
  Tensor rnd = random_tensor({3, 10}, 47);
  std::vector<int> rl = {2, 7, 4};
  auto analytic = softmax_cross_entropy(rnd, rl);
  const double h = 1e-6;
  for (size_t i = 0; i < rnd.data.size(); ++i) {
    const double orig = rnd.data[i];
    rnd.data[i] = orig + h;
    const double fp = softmax_cross_entropy(rnd, rl).loss;
    rnd.data[i] = orig - h;
    const double fm = softmax_cross_entropy(rnd, rl).loss;
    rnd.data[i] = orig;
    const double num = (fp - fm) / (2.0 * h);
    CHECK(num == doctest::Approx(analytic.grad.data[i]).epsilon(1e-4));
  }

  // label out of range
  CHECK_THROWS_AS(softmax_cross_entropy(rnd, {2, 7, 10}), ValidationError);
}

TEST_CASE("bce with logits gradcheck") {
  Tensor logits = random_tensor({6, 1}, 53);
  std::vector<int> labels = {0, 1, 1, 0, 1, 0};
  auto analytic = bce_with_logits(logits, labels);
  const double h = 1e-6;
  for (size_t i = 0; i < logits.data.size(); ++i) {
    const double orig = logits.data[i];
    logits.data[i] = orig + h;
    const double fp = bce_with_logits(logits, labels).loss;
    logits.data[i] = orig - h;
    const double fm = bce_with_logits(logits, labels).loss;
    logits.data[i] = orig;
    CHECK((fp - fm) / (2.0 * h) ==
          doctest::Approx(analytic.grad.data[i]).epsilon(1e-4));
  }
}

TEST_CASE("mse and kl gradchecks") {
  Tensor a = random_tensor({3, 5}, 59);
  Tensor b = random_tensor({3, 5}, 61);
  auto l = mse_loss(a, b);
  const double h = 1e-6;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const double orig = a.data[i];
    a.data[i] = orig + h;
    const double fp = mse_loss(a, b).loss;
    a.data[i] = orig - h;
    const double fm = mse_loss(a, b).loss;
    a.data[i] = orig;
    CHECK((fp - fm) / (2.0 * h) ==
          doctest::Approx(l.grad.data[i]).epsilon(1e-4));
  }

  Tensor mu = random_tensor({2, 4}, 67, 0.5);
  Tensor lv = random_tensor({2, 4}, 71, 0.3);
  auto kl = kl_unit_gaussian(mu, lv);
  CHECK(kl.loss >= 0.0);
  for (size_t i = 0; i < mu.data.size(); ++i) {
    double orig = mu.data[i];
    mu.data[i] = orig + h;
    const double fp = kl_unit_gaussian(mu, lv).loss;
    mu.data[i] = orig - h;
    const double fm = kl_unit_gaussian(mu, lv).loss;
    mu.data[i] = orig;
    CHECK((fp - fm) / (2.0 * h) ==
          doctest::Approx(kl.grad_mu.data[i]).epsilon(1e-4));
    orig = lv.data[i];
    lv.data[i] = orig + h;
    const double gp = kl_unit_gaussian(mu, lv).loss;
    lv.data[i] = orig - h;
    const double gm = kl_unit_gaussian(mu, lv).loss;
    lv.data[i] = orig;
    CHECK((gp - gm) / (2.0 * h) ==
          doctest::Approx(kl.grad_logvar.data[i]).epsilon(1e-4));
  }
  // KL of the exact prior is zero
  Tensor mu0({2, 4}), lv0({2, 4});
  CHECK(kl_unit_gaussian(mu0, lv0).loss == doctest::Approx(0.0));
}

TEST_CASE("sequential end-to-end gradcheck through a small conv net") {
  Sequential net;
  net.emplace<Conv2d>(1, 2, 3, 2, 1);
  net.emplace<ReLU>();
  net.emplace<Flatten>();
  net.emplace<Linear>(2 * 2 * 2, 3);
  net.init(73);
  Tensor x = random_tensor({2, 1, 4, 4}, 79);
  std::vector<int> labels = {1, 2};

  auto objective = [&]() {
    Tensor logits = net.forward(x, true);
    return softmax_cross_entropy(logits, labels).loss;
  };
  net.zero_grad();
  Tensor logits = net.forward(x, true);
  auto lg = softmax_cross_entropy(logits, labels);
  Tensor gx = net.backward(lg.grad);

  const double h = 1e-5;
  for (size_t i = 0; i < x.data.size(); ++i) {
    const double orig = x.data[i];
    x.data[i] = orig + h;
    const double fp = objective();
    x.data[i] = orig - h;
    const double fm = objective();
    x.data[i] = orig;
    const double num = (fp - fm) / (2.0 * h);
    const double denom = std::max({std::fabs(num), std::fabs(gx.data[i]), 1e-4});
    CHECK(std::fabs(num - gx.data[i]) / denom < 1e-3);
  }
}

TEST_CASE("adam reduces a quadratic") {
  ParamTensor p{"p", {4}, {5.0, -3.0, 2.0, 10.0}, {0, 0, 0, 0}};
  Adam opt({&p}, 0.1);
  for (int step = 0; step < 500; ++step) {
    for (size_t i = 0; i < 4; ++i) p.grad[i] = 2.0 * p.value[i];
    opt.step();
  }
  for (double v : p.value) CHECK(std::fabs(v) < 0.05);
}

TEST_CASE("deterministic init given seed") {
  Sequential a, b;
  a.emplace<Linear>(8, 8);
  b.emplace<Linear>(8, 8);
  a.init(123);
  b.init(123);
  auto pa = a.params(), pb = b.params();
  for (size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i]->value == pb[i]->value);
  }
}

TEST_CASE("flops and param counts for a linear layer") {
  Linear layer(100, 50);
  CHECK(layer.forward_flops({1, 100}) == 2 * 100 * 50 + 50);
  Sequential net;
  net.emplace<Linear>(100, 50);
  CHECK(net.param_count() == 100 * 50 + 50);
}
