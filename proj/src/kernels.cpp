#include "kernels.hpp"

#include <Eigen/Core>

namespace satlab::detail {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Stride = Eigen::OuterStride<>;
using ConstView = Eigen::Map<const RowMat, Eigen::Unaligned, Stride>;
using View = Eigen::Map<RowMat, Eigen::Unaligned, Stride>;

Eigen::Index ix(std::size_t v) { return static_cast<Eigen::Index>(v); }

}  // namespace

void gemm(Op ta, Op tb, std::size_t m, std::size_t n, std::size_t k, double alpha, const double* a, std::size_t lda,
          const double* b, std::size_t ldb, double beta, double* c, std::size_t ldc) {
    if (m == 0 || n == 0) return;
    View cm(c, ix(m), ix(n), Stride(ix(ldc)));
    if (beta == 0.0) cm.setZero();
    else if (beta != 1.0) cm *= beta;
    if (k == 0) return;

    // Stored shapes: A is m×k (N) or k×m (T); same for B.
    ConstView am(a, ta == Op::N ? ix(m) : ix(k), ta == Op::N ? ix(k) : ix(m), Stride(ix(lda)));
    ConstView bm(b, tb == Op::N ? ix(k) : ix(n), tb == Op::N ? ix(n) : ix(k), Stride(ix(ldb)));
    if (ta == Op::N && tb == Op::N) cm.noalias() += alpha * am * bm;
    else if (ta == Op::N) cm.noalias() += alpha * am * bm.transpose();
    else if (tb == Op::N) cm.noalias() += alpha * am.transpose() * bm;
    else cm.noalias() += alpha * am.transpose() * bm.transpose();
}

void syrk_upper(std::size_t d, std::size_t rows, const double* x, std::size_t ldx, double* c, std::size_t ldc) {
    if (d == 0 || rows == 0) return;
    ConstView xm(x, ix(rows), ix(d), Stride(ix(ldx)));
    View cm(c, ix(d), ix(d), Stride(ix(ldc)));
    cm.selfadjointView<Eigen::Upper>().rankUpdate(xm.transpose());
}

}  // namespace satlab::detail
