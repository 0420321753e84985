#include "semcom/kernels.hpp"

#include <cblas.h>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

namespace semcom::kernels {

namespace {

Backend g_default = [] {
  if (const char* env = std::getenv("SEMCOM_GEMM_BACKEND")) {
    return backend_from_string(env);
  }
  return Backend::kBlas;
}();

inline const double* cell(const double* m, int ld, int r, int c) {
  return m + static_cast<size_t>(r) * ld + c;
}

// One output row of C; inner loop order matches the serial reference so the
// omp variant reproduces it bit-exactly.
void gemm_row(bool trans_a, bool trans_b, int n, int k, double alpha,
              const double* a, int lda, const double* b, int ldb, double beta,
              double* c_row, int i) {
  for (int j = 0; j < n; ++j) {
    double acc = 0.0;
    for (int p = 0; p < k; ++p) {
      const double av = trans_a ? *cell(a, lda, p, i) : *cell(a, lda, i, p);
      const double bv = trans_b ? *cell(b, ldb, j, p) : *cell(b, ldb, p, j);
      acc += av * bv;
    }
    c_row[j] = alpha * acc + (beta == 0.0 ? 0.0 : beta * c_row[j]);
  }
}

void gemm_serial(bool trans_a, bool trans_b, int m, int n, int k, double alpha,
                 const double* a, int lda, const double* b, int ldb,
                 double beta, double* c, int ldc) {
  for (int i = 0; i < m; ++i) {
    gemm_row(trans_a, trans_b, n, k, alpha, a, lda, b, ldb, beta,
             c + static_cast<size_t>(i) * ldc, i);
  }
}

void gemm_omp(bool trans_a, bool trans_b, int m, int n, int k, double alpha,
              const double* a, int lda, const double* b, int ldb, double beta,
              double* c, int ldc) {
#pragma omp parallel for schedule(static)
  for (int i = 0; i < m; ++i) {
    gemm_row(trans_a, trans_b, n, k, alpha, a, lda, b, ldb, beta,
             c + static_cast<size_t>(i) * ldc, i);
  }
}

void gemm_blas(bool trans_a, bool trans_b, int m, int n, int k, double alpha,
               const double* a, int lda, const double* b, int ldb, double beta,
               double* c, int ldc) {
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b,
              ldb, beta, c, ldc);
}

// Fills the rows of the patch matrix belonging to one input channel.
void im2col_channel(const double* img, int ch, int h, int w, int kh, int kw,
                    int stride, int pad, int oh, int ow, double* col) {
  const double* src = img + static_cast<size_t>(ch) * h * w;
  for (int ky = 0; ky < kh; ++ky) {
    for (int kx = 0; kx < kw; ++kx) {
      double* dst =
          col + (static_cast<size_t>(ch) * kh * kw + ky * kw + kx) * oh * ow;
      for (int oy = 0; oy < oh; ++oy) {
        const int iy = oy * stride - pad + ky;
        for (int ox = 0; ox < ow; ++ox) {
          const int ix = ox * stride - pad + kx;
          const bool in = iy >= 0 && iy < h && ix >= 0 && ix < w;
          dst[oy * ow + ox] = in ? src[iy * w + ix] : 0.0;
        }
      }
    }
  }
}

void col2im_channel(const double* col, int ch, int h, int w, int kh, int kw,
                    int stride, int pad, int oh, int ow, double* img_grad) {
  double* dst = img_grad + static_cast<size_t>(ch) * h * w;
  for (int ky = 0; ky < kh; ++ky) {
    for (int kx = 0; kx < kw; ++kx) {
      const double* src =
          col + (static_cast<size_t>(ch) * kh * kw + ky * kw + kx) * oh * ow;
      for (int oy = 0; oy < oh; ++oy) {
        const int iy = oy * stride - pad + ky;
        if (iy < 0 || iy >= h) continue;
        for (int ox = 0; ox < ow; ++ox) {
          const int ix = ox * stride - pad + kx;
          if (ix < 0 || ix >= w) continue;
          dst[iy * w + ix] += src[oy * ow + ox];
        }
      }
    }
  }
}

}  // namespace

Backend default_backend() { return g_default; }
void set_default_backend(Backend b) { g_default = b; }

Backend backend_from_string(const std::string& name) {
  if (name == "serial") return Backend::kSerial;
  if (name == "omp" || name == "openmp") return Backend::kOpenMP;
  if (name == "blas") return Backend::kBlas;
  throw std::invalid_argument("unknown gemm backend: " + name);
}

void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha,
          const double* a, int lda, const double* b, int ldb, double beta,
          double* c, int ldc, Backend backend) {
  switch (backend) {
    case Backend::kSerial:
      gemm_serial(trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
      break;
    case Backend::kOpenMP:
      gemm_omp(trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
      break;
    case Backend::kBlas:
      gemm_blas(trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
      break;
  }
}

void im2col(const double* img, int c, int h, int w, int kh, int kw, int stride,
            int pad, double* col, Backend backend) {
  const int oh = conv_out_dim(h, kh, stride, pad);
  const int ow = conv_out_dim(w, kw, stride, pad);
  if (backend == Backend::kOpenMP) {
#pragma omp parallel for schedule(static)
    for (int ch = 0; ch < c; ++ch) {
      im2col_channel(img, ch, h, w, kh, kw, stride, pad, oh, ow, col);
    }
  } else {
    for (int ch = 0; ch < c; ++ch) {
      im2col_channel(img, ch, h, w, kh, kw, stride, pad, oh, ow, col);
    }
  }
}

void col2im(const double* col, int c, int h, int w, int kh, int kw, int stride,
            int pad, double* img_grad, Backend backend) {
  const int oh = conv_out_dim(h, kh, stride, pad);
  const int ow = conv_out_dim(w, kw, stride, pad);
  if (backend == Backend::kOpenMP) {
    // Channels write to disjoint image planes, so this is race-free.
#pragma omp parallel for schedule(static)
    for (int ch = 0; ch < c; ++ch) {
      col2im_channel(col, ch, h, w, kh, kw, stride, pad, oh, ow, img_grad);
    }
  } else {
    for (int ch = 0; ch < c; ++ch) {
      col2im_channel(col, ch, h, w, kh, kw, stride, pad, oh, ow, img_grad);
    }
  }
}

void axpy(size_t n, double alpha, const double* x, double* y, Backend backend) {
  if (backend == Backend::kOpenMP) {
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
      y[i] += alpha * x[i];
    }
  } else {
    for (size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
  }
}

}  // namespace semcom::kernels
