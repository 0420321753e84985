#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "semcom/rng.hpp"

using namespace semcom;

TEST_CASE("identical seeds give identical streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different seeds diverge") {
  Rng a(1), b(2);
  bool any_diff = false;
  for (int i = 0; i < 16; ++i) {
    if (a.next_u64() != b.next_u64()) any_diff = true;
  }
  CHECK(any_diff);
}

TEST_CASE("normal moments") {
  Rng rng(7);
  const int n = 200000;
  double sum = 0.0, sq = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = rng.normal();
    sum += v;
    sq += v * v;
  }
  const double mean = sum / n;
  const double var = sq / n - mean * mean;
  CHECK(std::fabs(mean) < 0.01);
  CHECK(var == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("laplace mean absolute deviation equals the scale") {
  Rng rng(9);
  const double b = 3.5;
  const int n = 400000;
  double mad = 0.0;
  for (int i = 0; i < n; ++i) mad += std::fabs(rng.laplace(b));
  mad /= n;
  CHECK(mad == doctest::Approx(b).epsilon(0.01));
}

TEST_CASE("derive_seed depends on order and content") {
  CHECK(derive_seed({1, 2}) != derive_seed({2, 1}));
  CHECK(derive_seed({1, 2}) != derive_seed({1, 3}));
  CHECK(derive_seed({1, 2}) == derive_seed({1, 2}));
}

TEST_CASE("shuffle is a permutation and deterministic") {
  std::vector<int> v(100);
  for (int i = 0; i < 100; ++i) v[i] = i;
  Rng a(5);
  a.shuffle(v);
  std::vector<int> w(100);
  for (int i = 0; i < 100; ++i) w[i] = i;
  Rng b(5);
  b.shuffle(w);
  CHECK(v == w);
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 100; ++i) CHECK(sorted[i] == i);
}
