#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <vector>

#include "semcom/kernels.hpp"
#include "semcom/rng.hpp"

using namespace semcom;
using kernels::Backend;

namespace {

std::vector<double> random_mat(size_t n, uint64_t seed) {
  std::vector<double> v(n);
  Rng rng(seed);
  for (auto& x : v) x = rng.normal();
  return v;
}

void run_gemm(Backend b, bool ta, bool tb, int m, int n, int k,
              const std::vector<double>& a, const std::vector<double>& bm,
              std::vector<double>& c) {
  const int lda = ta ? m : k;
  const int ldb = tb ? k : n;
  kernels::gemm(ta, tb, m, n, k, 1.0, a.data(), lda, bm.data(), ldb, 0.0,
                c.data(), n, b);
}

}  // namespace

TEST_CASE("omp gemm is bit-identical to the serial reference") {
  const int m = 37, n = 29, k = 53;
  for (int ta = 0; ta <= 1; ++ta) {
    for (int tb = 0; tb <= 1; ++tb) {
      auto a = random_mat(static_cast<size_t>(m) * k, 1 + ta);
      auto b = random_mat(static_cast<size_t>(k) * n, 7 + tb);
      std::vector<double> c_serial(static_cast<size_t>(m) * n, 0.0);
      std::vector<double> c_omp(static_cast<size_t>(m) * n, 0.0);
      run_gemm(Backend::kSerial, ta, tb, m, n, k, a, b, c_serial);
      run_gemm(Backend::kOpenMP, ta, tb, m, n, k, a, b, c_omp);
      for (size_t i = 0; i < c_serial.size(); ++i) {
        CHECK(c_serial[i] == c_omp[i]);
      }
    }
  }
}

TEST_CASE("blas gemm matches the serial reference within tolerance") {
  const int m = 64, n = 48, k = 96;
  auto a = random_mat(static_cast<size_t>(m) * k, 11);
  auto b = random_mat(static_cast<size_t>(k) * n, 13);
  std::vector<double> c_serial(static_cast<size_t>(m) * n, 0.0);
  std::vector<double> c_blas(static_cast<size_t>(m) * n, 0.0);
  run_gemm(Backend::kSerial, false, false, m, n, k, a, b, c_serial);
  run_gemm(Backend::kBlas, false, false, m, n, k, a, b, c_blas);
  for (size_t i = 0; i < c_serial.size(); ++i) {
    CHECK(c_blas[i] == doctest::Approx(c_serial[i]).epsilon(1e-12));
  }
}

TEST_CASE("gemm accumulates into C when beta=1") {
  const int m = 4, n = 4, k = 4;
  auto a = random_mat(16, 3);
  auto b = random_mat(16, 4);
  std::vector<double> c(16, 1.0), c2(16, 0.0);
  kernels::gemm(false, false, m, n, k, 1.0, a.data(), k, b.data(), n, 1.0,
                c.data(), n, Backend::kSerial);
  kernels::gemm(false, false, m, n, k, 1.0, a.data(), k, b.data(), n, 0.0,
                c2.data(), n, Backend::kSerial);
  for (int i = 0; i < 16; ++i) CHECK(c[i] == doctest::Approx(c2[i] + 1.0));
}

TEST_CASE("im2col/col2im round-trip accumulates the patch multiplicity") {
  // with a 3x3 kernel, stride 1, pad 1, col2im(im2col(x)) counts how many
  // patches each pixel appears in; interior pixels appear 9 times
  const int c = 2, h = 6, w = 5;
  std::vector<double> img(static_cast<size_t>(c) * h * w, 1.0);
  const int oh = kernels::conv_out_dim(h, 3, 1, 1);
  const int ow = kernels::conv_out_dim(w, 3, 1, 1);
  std::vector<double> col(static_cast<size_t>(c) * 9 * oh * ow);
  kernels::im2col(img.data(), c, h, w, 3, 3, 1, 1, col.data(),
                  Backend::kSerial);
  std::vector<double> back(img.size(), 0.0);
  kernels::col2im(col.data(), c, h, w, 3, 3, 1, 1, back.data(),
                  Backend::kSerial);
  // interior pixel of channel 1
  CHECK(back[(1 * h + 2) * w + 2] == doctest::Approx(9.0));
  // corner pixel only appears in 4 patches
  CHECK(back[0] == doctest::Approx(4.0));
}

TEST_CASE("im2col omp matches serial bit-exactly") {
  const int c = 3, h = 8, w = 8;
  auto img = random_mat(static_cast<size_t>(c) * h * w, 21);
  const int oh = kernels::conv_out_dim(h, 3, 2, 1);
  const int ow = kernels::conv_out_dim(w, 3, 2, 1);
  std::vector<double> col_s(static_cast<size_t>(c) * 9 * oh * ow);
  std::vector<double> col_o(col_s.size());
  kernels::im2col(img.data(), c, h, w, 3, 3, 2, 1, col_s.data(),
                  Backend::kSerial);
  kernels::im2col(img.data(), c, h, w, 3, 3, 2, 1, col_o.data(),
                  Backend::kOpenMP);
  for (size_t i = 0; i < col_s.size(); ++i) CHECK(col_s[i] == col_o[i]);
}
