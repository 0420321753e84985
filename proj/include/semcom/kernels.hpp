#pragma once

// Data-parallel compute kernels behind the network layers. Each kernel has a
// serial reference implementation and an OpenMP variant; gemm additionally
// has a BLAS backend (OpenBLAS), which is the default because the training
// presets are gemm-bound. The serial path is kept for testing: the OpenMP
// variants assign every output element to exactly one thread and keep the
// inner accumulation order identical to the serial loop, so serial and omp
// results are bit-identical for any thread count. tools/bench_kernels
// compares the backends.

#include <cstddef>
#include <string>

namespace semcom::kernels {

enum class Backend { kSerial, kOpenMP, kBlas };

Backend default_backend();
void set_default_backend(Backend b);
Backend backend_from_string(const std::string& name);

// C = alpha * op(A) * op(B) + beta * C, row-major dense.
// op(A) is m x k, op(B) is k x n, C is m x n with leading dimensions
// lda/ldb/ldc of the stored (untransposed) matrices.
void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha,
          const double* a, int lda, const double* b, int ldb, double beta,
          double* c, int ldc, Backend backend);

inline void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha,
                 const double* a, int lda, const double* b, int ldb,
                 double beta, double* c, int ldc) {
  gemm(trans_a, trans_b, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc,
       default_backend());
}

// Lowers a (c, h, w) image into a (c*kh*kw) x (oh*ow) patch matrix for a
// convolution with the given stride and zero padding.
void im2col(const double* img, int c, int h, int w, int kh, int kw, int stride,
            int pad, double* col, Backend backend);

// Adjoint of im2col: scatter-adds the patch matrix back into the image.
// Caller zeroes img_grad beforehand.
void col2im(const double* col, int c, int h, int w, int kh, int kw, int stride,
            int pad, double* img_grad, Backend backend);

inline int conv_out_dim(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

// y[i] += x[i], parallel over elements.
void axpy(size_t n, double alpha, const double* x, double* y, Backend backend);

}  // namespace semcom::kernels
