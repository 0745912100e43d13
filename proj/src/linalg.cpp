#include "satlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "kernels.hpp"
#include "satlab/error.hpp"

namespace satlab::linalg {

Matrix::Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
        throw Error(ErrorKind::ShapeMismatch, std::to_string(rows_) + "x" + std::to_string(cols_) + " matrix given " +
                                                  std::to_string(data_.size()) + " values");
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

bool Matrix::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double trace(const Matrix& m) {
    double t = 0.0;
    for (std::size_t i = 0; i < std::min(m.rows(), m.cols()); ++i) t += m(i, i);
    return t;
}

double frobenius_norm(const Matrix& m) {
    double s = 0.0;
    for (double v : m.data()) s += v * v;
    return std::sqrt(s);
}

double max_abs(const Matrix& m) {
    double s = 0.0;
    for (double v : m.data()) s = std::max(s, std::abs(v));
    return s;
}

namespace {

void check_symmetric(const Matrix& m) {
    if (!m.square()) {
        throw Error(ErrorKind::ShapeMismatch, "eigendecomposition needs a square matrix, got " +
                                                  std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
    }
    if (!m.all_finite()) throw Error(ErrorKind::NonFinite, "matrix contains NaN or Inf");
    const double tol = kSymmetryTolerance * std::max(max_abs(m), 1e-300);
    const std::size_t n = m.rows();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (std::abs(m(i, j) - m(j, i)) > tol) {
                throw Error(ErrorKind::NonSymmetric, "entries (" + std::to_string(i) + "," + std::to_string(j) +
                                                         ") and transpose differ beyond tolerance");
            }
        }
    }
}

// Cyclic Jacobi rotations on a copy of `m`. Returns the diagonal after
// convergence; when `vt` is non-null it receives the eigenvectors as rows.
std::vector<double> jacobi(const Matrix& m, Matrix* vt) {
    const std::size_t n = m.rows();
    // Odd leading dimension: a power-of-two row stride makes the column
    // writes below fight over the same cache sets.
    const std::size_t ld = n | 1;
    std::vector<double> buf(n * ld, 0.0);
    auto a = [&](std::size_t i, std::size_t j) -> double& { return buf[i * ld + j]; };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = m(i, j);
    if (vt) *vt = Matrix::identity(n);

    auto diagonal = [&] {
        std::vector<double> d(n);
        for (std::size_t i = 0; i < n; ++i) d[i] = a(i, i);
        return d;
    };
    if (n < 2) return diagonal();

    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i) scale += std::abs(a(i, i));
    if (scale == 0.0) scale = frobenius_norm(m);
    if (scale == 0.0) return diagonal();
    const double stop = 1e-12 * scale;

    auto off_norm = [&] {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
        return std::sqrt(s);
    };

    constexpr int kMaxSweeps = 100;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        if (off_norm() < stop) return diagonal();
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double app = a(p, p);
                const double aqq = a(q, q);
                // An off-diagonal entry this small cannot move the diagonal.
                const double g = 100.0 * std::abs(apq);
                if (sweep > 3 && std::abs(app) + g == std::abs(app) && std::abs(aqq) + g == std::abs(aqq)) {
                    a(p, q) = 0.0;
                    a(q, p) = 0.0;
                    continue;
                }
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                const double tau = s / (1.0 + c);

                // Rotate rows p and q in place, then mirror them into the columns.
                double* __restrict rp = &a(p, 0);
                double* __restrict rq = &a(q, 0);
                for (std::size_t r = 0; r < n; ++r) {
                    const double arp = rp[r];
                    const double arq = rq[r];
                    rp[r] = arp - s * (arq + tau * arp);
                    rq[r] = arq + s * (arp - tau * arq);
                }
                rp[p] = app - t * apq;
                rq[q] = aqq + t * apq;
                rp[q] = 0.0;
                rq[p] = 0.0;
                for (std::size_t r = 0; r < n; ++r) {
                    a(r, p) = rp[r];
                    a(r, q) = rq[r];
                }
                if (vt) {
                    double* __restrict vp = vt->row(p).data();
                    double* __restrict vq = vt->row(q).data();
                    for (std::size_t r = 0; r < n; ++r) {
                        const double x = vp[r];
                        const double y = vq[r];
                        vp[r] = x - s * (y + tau * x);
                        vq[r] = y + s * (x - tau * y);
                    }
                }
            }
        }
    }
    return diagonal();
}

EigenSpectrum validated_spectrum(std::vector<double> raw) {
    double positive = 0.0;
    for (double x : raw) positive += std::max(x, 0.0);
    const double floor = -kNegativeEigenTolerance * std::max(positive, kZeroVariance);
    EigenSpectrum spectrum;
    spectrum.values.reserve(raw.size());
    for (double x : raw) {
        if (x < floor) {
            throw Error(ErrorKind::NotPositiveSemidefinite,
                        "eigenvalue " + std::to_string(x) + " is below the clamp tolerance");
        }
        // Round-off of either sign around zero counts as zero, so rank
        // deficient covariances report exact zeros.
        spectrum.values.push_back(x <= -floor ? 0.0 : x);
    }
    std::sort(spectrum.values.begin(), spectrum.values.end(), std::greater<>());
    spectrum.total = std::accumulate(spectrum.values.begin(), spectrum.values.end(), 0.0);
    return spectrum;
}

}  // namespace

std::vector<double> symmetric_eigenvalues(const Matrix& m) {
    check_symmetric(m);
    std::vector<double> values = jacobi(m, nullptr);
    std::sort(values.begin(), values.end(), std::greater<>());
    return values;
}

EigenSpectrum eigh(const Matrix& m) {
    return validated_spectrum(symmetric_eigenvalues(m));
}

EigenDecomposition eigh_with_vectors(const Matrix& m) {
    check_symmetric(m);
    const std::size_t n = m.rows();
    Matrix vt;
    const std::vector<double> d = jacobi(m, &vt);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return d[i] > d[j]; });

    std::vector<double> raw(n);
    Matrix sorted(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        raw[k] = d[order[k]];
        for (std::size_t r = 0; r < n; ++r) sorted(r, k) = vt(order[k], r);
    }
    return {validated_spectrum(std::move(raw)), std::move(sorted)};
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        throw Error(ErrorKind::ShapeMismatch, "matmul of " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                                                  " by " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    }
    Matrix c(a.rows(), b.cols());
    if (a.rows() == 0 || b.cols() == 0) return c;
    if (a.cols() == 0) return c;
    detail::gemm(detail::Op::N, detail::Op::N, a.rows(), b.cols(), a.cols(), 1.0, a.data().data(), a.cols(),
                 b.data().data(), b.cols(), 0.0, c.data().data(), c.cols());
    if (!c.all_finite()) throw Error(ErrorKind::NonFinite, "matmul produced non-finite entries");
    return c;
}

Matrix transpose(const Matrix& m) {
    Matrix t(m.cols(), m.rows());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
    return t;
}

double cumulative_ratio(const EigenSpectrum& spectrum, std::size_t k) {
    if (k > spectrum.values.size()) {
        throw Error(ErrorKind::ShapeMismatch,
                    "k=" + std::to_string(k) + " exceeds spectrum length " + std::to_string(spectrum.values.size()));
    }
    if (spectrum.total <= kZeroVariance) throw Error(ErrorKind::ZeroVariance, "total variance is zero");
    if (k == spectrum.values.size()) return 1.0;
    double top = 0.0;
    for (std::size_t i = 0; i < k; ++i) top += spectrum.values[i];
    return std::min(top / spectrum.total, 1.0);
}

}  // namespace satlab::linalg
