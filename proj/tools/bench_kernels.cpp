// Benchmarks the gemm backends (serial reference, OpenMP, BLAS) on the
// matrix shapes the training loops actually produce, plus im2col.
//
//   bench_kernels [--reps N]

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <vector>

#include "semcom/kernels.hpp"
#include "semcom/rng.hpp"

using namespace semcom;

namespace {

double time_gemm(kernels::Backend backend, int m, int n, int k, int reps) {
  std::vector<double> a(static_cast<size_t>(m) * k);
  std::vector<double> b(static_cast<size_t>(k) * n);
  std::vector<double> c(static_cast<size_t>(m) * n, 0.0);
  Rng rng(7);
  for (auto& v : a) v = rng.normal();
  for (auto& v : b) v = rng.normal();
  kernels::gemm(false, false, m, n, k, 1.0, a.data(), k, b.data(), n, 0.0,
                c.data(), n, backend);  // warm-up
  const auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) {
    kernels::gemm(false, false, m, n, k, 1.0, a.data(), k, b.data(), n, 0.0,
                  c.data(), n, backend);
  }
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count() / reps;
}

const char* name_of(kernels::Backend b) {
  switch (b) {
    case kernels::Backend::kSerial: return "serial";
    case kernels::Backend::kOpenMP: return "omp";
    case kernels::Backend::kBlas: return "blas";
  }
  return "?";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gemm backend benchmark"};
  int reps = 5;
  app.add_option("--reps", reps, "repetitions per shape");
  CLI11_PARSE(app, argc, argv);

  // shapes: conv1 fwd (batch chunk), conv2 fwd, projector, remapper
  struct Shape {
    const char* label;
    int m, n, k;
  };
  const Shape shapes[] = {
      {"conv 32x27 @ 256 cols", 32, 256, 27},
      {"conv 64x288 @ 64 cols", 64, 64, 288},
      {"batch projector 512x128x512", 512, 128, 512},
      {"remapper 512x2816x2816", 512, 2816, 2816},
  };
  std::printf("%-30s %10s %10s %10s\n", "shape", "serial", "omp", "blas");
  for (const auto& s : shapes) {
    double t[3];
    kernels::Backend backends[] = {kernels::Backend::kSerial,
                                   kernels::Backend::kOpenMP,
                                   kernels::Backend::kBlas};
    for (int i = 0; i < 3; ++i) {
      // keep the big serial shapes affordable
      const int r = (i == 0 && static_cast<long long>(s.m) * s.n * s.k > 1e9)
                        ? 1
                        : reps;
      t[i] = time_gemm(backends[i], s.m, s.n, s.k, r);
    }
    const double flops = 2.0 * s.m * s.n * s.k;
    std::printf("%-30s", s.label);
    for (int i = 0; i < 3; ++i) {
      std::printf(" %7.2f GF", flops / t[i] / 1e9);
    }
    std::printf("\n");
    (void)name_of(backends[0]);
  }
  return 0;
}
