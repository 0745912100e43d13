#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace satlab::linalg {

/// Row-major dense matrix of 64-bit reals.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    static Matrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool square() const noexcept { return rows_ == cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> data() noexcept { return data_; }
    std::span<const double> data() const noexcept { return data_; }
    std::span<double> row(std::size_t r) { return std::span<double>(data_).subspan(r * cols_, cols_); }
    std::span<const double> row(std::size_t r) const {
        return std::span<const double>(data_).subspan(r * cols_, cols_);
    }

    bool all_finite() const noexcept;

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Eigenvalues of a symmetric positive semidefinite matrix, sorted
/// non-increasing, with round-off negatives clamped to zero.
struct EigenSpectrum {
    std::vector<double> values;
    double total = 0.0;
};

struct EigenDecomposition {
    EigenSpectrum spectrum;
    /// Column i is the unit eigenvector of spectrum.values[i].
    Matrix vectors;
};

inline constexpr double kSymmetryTolerance = 1e-9;
inline constexpr double kNegativeEigenTolerance = 1e-9;
inline constexpr double kZeroVariance = 1e-12;

/// Raw eigenvalues of a symmetric matrix (any sign), sorted descending.
/// Cyclic Jacobi; throws NonSymmetric / NonFinite / ShapeMismatch.
std::vector<double> symmetric_eigenvalues(const Matrix& m);

/// Spectrum of a symmetric PSD matrix. Values below -1e-9·total are
/// rejected with NotPositiveSemidefinite; anything within 1e-9·total of
/// zero (either sign) becomes exactly 0.
EigenSpectrum eigh(const Matrix& m);

/// As `eigh`, also returning eigenvectors (debugging and tests).
EigenDecomposition eigh_with_vectors(const Matrix& m);

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& m);

/// Fraction of total variance carried by the top-k values.
double cumulative_ratio(const EigenSpectrum& spectrum, std::size_t k);

double trace(const Matrix& m);
double frobenius_norm(const Matrix& m);
double max_abs(const Matrix& m);

}  // namespace satlab::linalg
