#pragma once

// Row-major dense kernels on raw buffers, backed by Eigen.

#include <cstddef>

namespace satlab::detail {

enum class Op { N, T };

/// C = alpha·op(A)·op(B) + beta·C. op(A) is m×k, op(B) is k×n, C is m×n.
void gemm(Op ta, Op tb, std::size_t m, std::size_t n, std::size_t k, double alpha, const double* a, std::size_t lda,
          const double* b, std::size_t ldb, double beta, double* c, std::size_t ldc);

/// Upper triangle of C (d×d) += Xᵀ·X for X of `rows`×d.
void syrk_upper(std::size_t d, std::size_t rows, const double* x, std::size_t ldx, double* c, std::size_t ldc);

}  // namespace satlab::detail
