#pragma once

// Independent reference implementations used to check the library. Each one
// is deliberately naive: no blocking, no streaming, no shared code with src/.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <vector>

#include "satlab/linalg.hpp"
#include "satlab/random.hpp"

namespace oracle {

using satlab::linalg::Matrix;

inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
            c(i, j) = s;
        }
    return c;
}

inline Matrix random_matrix(std::size_t r, std::size_t c, satlab::Rng& rng) {
    Matrix m(r, c);
    for (auto& v : m.data()) v = rng.normal();
    return m;
}

/// Eigenvalues of a symmetric PSD matrix by power iteration with deflation.
inline std::vector<double> power_eigenvalues(Matrix a, std::size_t iterations = 200000) {
    const std::size_t n = a.rows();
    std::vector<double> out;
    satlab::Rng rng(99);
    for (std::size_t e = 0; e < n; ++e) {
        std::vector<double> v(n), w(n);
        for (auto& x : v) x = rng.normal();
        double lambda = 0.0;
        for (std::size_t it = 0; it < iterations; ++it) {
            double norm = 0.0;
            for (double x : v) norm += x * x;
            norm = std::sqrt(norm);
            if (norm == 0.0) break;
            for (auto& x : v) x /= norm;
            for (std::size_t i = 0; i < n; ++i) {
                w[i] = 0.0;
                for (std::size_t j = 0; j < n; ++j) w[i] += a(i, j) * v[j];
            }
            double next = 0.0;
            for (std::size_t i = 0; i < n; ++i) next += v[i] * w[i];
            std::swap(v, w);
            if (it > 50 && std::abs(next - lambda) <= 1e-15 * std::max(1.0, std::abs(next))) {
                lambda = next;
                break;
            }
            lambda = next;
        }
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        for (auto& x : v) x /= norm;
        out.push_back(lambda);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) a(i, j) -= lambda * v[i] * v[j];
    }
    std::sort(out.begin(), out.end(), std::greater<>());
    return out;
}

/// Textbook two-pass population covariance of the rows of x.
inline Matrix two_pass_covariance(const std::vector<std::vector<double>>& x) {
    const std::size_t n = x.size(), d = x.front().size();
    std::vector<double> mean(d, 0.0);
    for (const auto& row : x)
        for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
    for (auto& m : mean) m /= static_cast<double>(n);
    Matrix c(d, d);
    for (const auto& row : x)
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < d; ++j) c(i, j) += (row[i] - mean[i]) * (row[j] - mean[j]);
    for (auto& v : c.data()) v /= static_cast<double>(n);
    return c;
}

inline double max_rel_diff(const Matrix& a, const Matrix& b) {
    double scale = 0.0, diff = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
        scale = std::max(scale, std::abs(b.data()[i]));
        diff = std::max(diff, std::abs(a.data()[i] - b.data()[i]));
    }
    return scale > 0.0 ? diff / scale : diff;
}

/// Mean over the block [r0, r1) × [c0, c1) of one H×W plane.
inline double block_mean(const double* plane, std::size_t w, std::size_t r0, std::size_t r1, std::size_t c0,
                         std::size_t c1) {
    double s = 0.0;
    for (std::size_t r = r0; r < r1; ++r)
        for (std::size_t c = c0; c < c1; ++c) s += plane[r * w + c];
    return s / static_cast<double>((r1 - r0) * (c1 - c0));
}

/// Central finite-difference gradient of f at x.
inline std::vector<double> numeric_gradient(const std::function<double()>& f, std::span<double> x, double h = 1e-5) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double keep = x[i];
        x[i] = keep + h;
        const double up = f();
        x[i] = keep - h;
        const double down = f();
        x[i] = keep;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

/// Relative error used for gradient checks: |a−n| / max(|a|, |n|, floor).
inline double grad_rel_error(double analytic, double numeric, double floor = 1e-6) {
    return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

// ---- receptive fields by brute force -------------------------------------

struct StackLayer {
    bool pool = false;
    std::size_t kernel = 1;
    std::size_t stride = 1;
};

/// Valid (unpadded) 1-D conv with weight 1/k per tap or max-pool.
inline std::vector<double> run_1d(const std::vector<StackLayer>& stack, std::vector<double> x) {
    for (const auto& l : stack) {
        if (x.size() < l.kernel) return {};
        const std::size_t out = (x.size() - l.kernel) / l.stride + 1;
        std::vector<double> y(out);
        for (std::size_t o = 0; o < out; ++o) {
            double acc = l.pool ? x[o * l.stride] : 0.0;
            for (std::size_t t = 0; t < l.kernel; ++t) {
                const double v = x[o * l.stride + t];
                acc = l.pool ? std::max(acc, v) : acc + v / static_cast<double>(l.kernel);
            }
            y[o] = acc;
        }
        x = std::move(y);
    }
    return x;
}

/// Extent (first to last, inclusive) of the input positions whose
/// perturbation changes output unit 0. Positive weights on a constant
/// positive input make every dependency visible, including through max
/// pooling (all window entries tie).
inline std::size_t influence_rf_1d(const std::vector<StackLayer>& stack, std::size_t length) {
    const std::vector<double> base(length, 1.0);
    const double ref = run_1d(stack, base).at(0);
    std::size_t first = length, last = 0;
    std::vector<double> x = base;
    for (std::size_t i = 0; i < length; ++i) {
        x[i] = 2.0;
        if (run_1d(stack, x).at(0) != ref) {
            first = std::min(first, i);
            last = i;
        }
        x[i] = 1.0;
    }
    return first == length ? 0 : last - first + 1;
}

/// 2-D version on a square input: returns the side of the bounding box of
/// pixels influencing output unit (0, 0).
inline std::size_t influence_rf_2d(const std::vector<StackLayer>& stack, std::size_t side) {
    auto run = [&](std::vector<double> x, std::size_t s) {
        for (const auto& l : stack) {
            if (s < l.kernel) return std::vector<double>{};
            const std::size_t out = (s - l.kernel) / l.stride + 1;
            std::vector<double> y(out * out);
            for (std::size_t r = 0; r < out; ++r)
                for (std::size_t c = 0; c < out; ++c) {
                    double acc = l.pool ? x[(r * l.stride) * s + c * l.stride] : 0.0;
                    for (std::size_t i = 0; i < l.kernel; ++i)
                        for (std::size_t j = 0; j < l.kernel; ++j) {
                            const double v = x[(r * l.stride + i) * s + c * l.stride + j];
                            acc = l.pool ? std::max(acc, v) : acc + v / static_cast<double>(l.kernel * l.kernel);
                        }
                    y[r * out + c] = acc;
                }
            x = std::move(y);
            s = out;
        }
        return x;
    };
    std::vector<double> x(side * side, 1.0);
    const double ref = run(x, side).at(0);
    std::size_t max_r = 0, max_c = 0;
    bool any = false;
    for (std::size_t r = 0; r < side; ++r)
        for (std::size_t c = 0; c < side; ++c) {
            x[r * side + c] = 2.0;
            if (run(x, side).at(0) != ref) {
                any = true;
                max_r = std::max(max_r, r);
                max_c = std::max(max_c, c);
            }
            x[r * side + c] = 1.0;
        }
    return any && max_r == max_c ? max_r + 1 : 0;
}

}  // namespace oracle
