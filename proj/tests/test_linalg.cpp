#include <doctest.h>

#include <numeric>

#include "oracles.hpp"
#include "satlab/error.hpp"
#include "satlab/linalg.hpp"

using namespace satlab;
using linalg::Matrix;

namespace {

Matrix gram(std::size_t n, Rng& rng) {
    const Matrix b = oracle::random_matrix(n, n, rng);
    return oracle::naive_matmul(linalg::transpose(b), b);
}

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::InvalidConfig;
}

}  // namespace

TEST_CASE("eigh: identity and diagonal") {
    const auto id = linalg::eigh(Matrix::identity(2));
    CHECK(id.values == std::vector<double>{1.0, 1.0});
    CHECK(id.total == doctest::Approx(2.0));

    const auto d = linalg::eigh(Matrix(2, 2, {2, 0, 0, 0}));
    CHECK(d.values == std::vector<double>{2.0, 0.0});
}

TEST_CASE("eigh: 5x5 Gram matrix against power iteration") {
    Rng rng(5);
    const Matrix a = gram(5, rng);
    const auto got = linalg::eigh(a).values;
    const auto want = oracle::power_eigenvalues(a);
    REQUIRE(got.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-8));
}

TEST_CASE("eigh: PSD values, trace, permutation similarity") {
    Rng rng(11);
    for (std::size_t n : {3u, 8u, 17u, 40u}) {
        const Matrix a = gram(n, rng);
        const auto s = linalg::eigh(a);
        const double tr = linalg::trace(a);
        for (double v : s.values) CHECK(v >= -1e-9 * tr);
        CHECK(std::abs(s.total - tr) <= 1e-9 * tr);
        CHECK(std::is_sorted(s.values.rbegin(), s.values.rend()));

        std::vector<std::size_t> perm = rng.permutation(n);
        Matrix p(n, n);
        for (std::size_t i = 0; i < n; ++i) p(i, perm[i]) = 1.0;
        const Matrix b = linalg::matmul(linalg::matmul(linalg::transpose(p), a), p);
        const auto sp = linalg::eigh(b);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(sp.values[i] - s.values[i]) <= 1e-10 * tr);
    }
}

TEST_CASE("eigh_with_vectors reconstructs the matrix") {
    Rng rng(3);
    const Matrix a = gram(12, rng);
    const auto dec = linalg::eigh_with_vectors(a);
    Matrix lambda(12, 12);
    for (std::size_t i = 0; i < 12; ++i) lambda(i, i) = dec.spectrum.values[i];
    const Matrix back = oracle::naive_matmul(oracle::naive_matmul(dec.vectors, lambda), linalg::transpose(dec.vectors));
    CHECK(oracle::max_rel_diff(back, a) < 1e-10);
}

TEST_CASE("eigh: errors") {
    CHECK(kind_of([] { linalg::eigh(Matrix(2, 2, {1, 1, 0, 1})); }) == ErrorKind::NonSymmetric);
    CHECK(kind_of([] { linalg::eigh(Matrix(2, 2, {1, NAN, NAN, 1})); }) == ErrorKind::NonFinite);
    CHECK(kind_of([] { linalg::eigh(Matrix(2, 3)); }) == ErrorKind::ShapeMismatch);
    CHECK(kind_of([] { linalg::eigh(Matrix(2, 2, {1, 0, 0, -1})); }) == ErrorKind::NotPositiveSemidefinite);
    // Tiny negative round-off is clamped.
    const auto s = linalg::eigh(Matrix(2, 2, {1, 0, 0, -1e-12}));
    CHECK(s.values[1] == 0.0);
    // Asymmetry below the relative tolerance is accepted.
    CHECK_NOTHROW(linalg::eigh(Matrix(2, 2, {1e6, 1e-5, 0, 1e6})));
}

TEST_CASE("matmul: identity, hand arithmetic, naive oracle") {
    Rng rng(1);
    const Matrix a = oracle::random_matrix(4, 4, rng);
    CHECK(linalg::matmul(Matrix::identity(4), a) == a);

    const Matrix p = linalg::matmul(Matrix(2, 2, {1, 2, 3, 4}), Matrix(2, 1, {1, 1}));
    CHECK(p == Matrix(2, 1, {3, 7}));

    const Matrix x = oracle::random_matrix(8, 8, rng), y = oracle::random_matrix(8, 8, rng);
    const Matrix got = linalg::matmul(x, y), want = oracle::naive_matmul(x, y);
    for (std::size_t i = 0; i < 64; ++i) CHECK(std::abs(got.data()[i] - want.data()[i]) <= 1e-12);

    // Odd shapes and larger sizes go through the blocked kernels.
    const Matrix u = oracle::random_matrix(37, 129, rng), v = oracle::random_matrix(129, 65, rng);
    CHECK(oracle::max_rel_diff(linalg::matmul(u, v), oracle::naive_matmul(u, v)) < 1e-12);

    CHECK(kind_of([] { linalg::matmul(Matrix(2, 3), Matrix(2, 3)); }) == ErrorKind::ShapeMismatch);
}

TEST_CASE("matmul: associativity") {
    Rng rng(8);
    for (int t = 0; t < 10; ++t) {
        const Matrix a = oracle::random_matrix(6, 9, rng), b = oracle::random_matrix(9, 4, rng),
                     c = oracle::random_matrix(4, 7, rng);
        const Matrix left = linalg::matmul(linalg::matmul(a, b), c);
        const Matrix right = linalg::matmul(a, linalg::matmul(b, c));
        CHECK(oracle::max_rel_diff(left, right) < 1e-10);
    }
}

TEST_CASE("cumulative_ratio") {
    linalg::EigenSpectrum s{{4, 3, 2, 1}, 10};
    CHECK(linalg::cumulative_ratio(s, 2) == doctest::Approx(0.7));
    CHECK(linalg::cumulative_ratio(s, 0) == 0.0);
    CHECK(linalg::cumulative_ratio(s, 4) == 1.0);

    linalg::EigenSpectrum flat{{1, 1, 1, 1}, 4};
    CHECK(linalg::cumulative_ratio(flat, 3) == doctest::Approx(0.75));

    Rng rng(2);
    const auto r = linalg::eigh(gram(10, rng));
    double prev = -1.0;
    for (std::size_t k = 0; k <= 10; ++k) {
        const double c = linalg::cumulative_ratio(r, k);
        CHECK(c >= prev);
        prev = c;
    }

    CHECK(kind_of([] { linalg::cumulative_ratio({{0, 0}, 0}, 1); }) == ErrorKind::ZeroVariance);
    CHECK(kind_of([&] { linalg::cumulative_ratio(s, 5); }) == ErrorKind::ShapeMismatch);
}
