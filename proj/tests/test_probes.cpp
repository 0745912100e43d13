#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "satlab/error.hpp"
#include "satlab/probes.hpp"
#include "satlab/random.hpp"

using namespace satlab;
using namespace satlab::probes;
using linalg::Matrix;

namespace {

template <typename F>
ErrorKind kind_of(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an error");
    return ErrorKind::InvalidConfig;
}

// Two Gaussian blobs in `d` dims, means ±half_gap along the first axis, unit spread.
void blobs(std::size_t n, std::size_t d, double half_gap, Rng& rng, Matrix& x, std::vector<std::size_t>& y) {
    x = Matrix(n, d);
    y.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = i % 2;
        for (std::size_t j = 0; j < d; ++j) x(i, j) = rng.normal();
        x(i, 0) += y[i] ? half_gap : -half_gap;
    }
}

Split first_n(std::size_t n_train, std::size_t n_total) {
    Split s;
    for (std::size_t i = 0; i < n_total; ++i) (i < n_train ? s.train : s.test).push_back(i);
    return s;
}

}  // namespace

TEST_CASE("probe_features: 2-D passthrough") {
    const Tensor t({3, 2}, {1, 2, 3, 4, 5, 6});
    const Matrix f = probe_features(t, 4);
    CHECK(f == Matrix(3, 2, {1, 2, 3, 4, 5, 6}));
}

TEST_CASE("probe_features: cap 1 is the spatial mean") {
    Tensor t({2, 2, 4, 4});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i / 16);  // constant planes
    const Matrix f = probe_features(t, 1);
    CHECK(f == Matrix(2, 2, {0, 1, 2, 3}));
}

TEST_CASE("probe_features: cap 2 against the block-mean oracle") {
    Rng rng(8);
    Tensor t({5, 3, 8, 8});
    for (auto& v : t.values()) v = rng.normal();
    const Matrix f = probe_features(t, 2);
    REQUIRE(f.rows() == 5);
    REQUIRE(f.cols() == 12);
    for (std::size_t n = 0; n < 5; ++n)
        for (std::size_t c = 0; c < 3; ++c) {
            const double* plane = t.values().data() + (n * 3 + c) * 64;
            for (std::size_t i = 0; i < 2; ++i)
                for (std::size_t j = 0; j < 2; ++j)
                    CHECK(f(n, c * 4 + i * 2 + j) ==
                          doctest::Approx(oracle::block_mean(plane, 8, i * 4, i * 4 + 4, j * 4, j * 4 + 4))
                              .epsilon(1e-12));
        }
}

TEST_CASE("probe_features: small maps are not upsampled, bad layouts rejected") {
    Tensor t({2, 4, 3, 3});
    CHECK(probe_features(t, 4).cols() == 4 * 9);
    CHECK(kind_of([] { probe_features(Tensor({2, 3, 4}), 2); }) == ErrorKind::BadLayout);
}

TEST_CASE("train_probe: separable blobs reach 0.99") {
    Rng rng(31);
    Matrix x;
    std::vector<std::size_t> y;
    blobs(300, 5, 2.0, rng, x, y);  // margin 4 sigma
    const ProbeResult r = train_probe(x, y, first_n(200, 300), ProbeConfig{}, "blobs");
    CHECK(r.layer == "blobs");
    CHECK(r.feature_dim == 5);
    CHECK(r.test_accuracy >= 0.99);
}

TEST_CASE("train_probe: random labels sit at chance") {
    double sum = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(100 + seed);
        const std::size_t n = 2000;
        Matrix x(n, 20);
        std::vector<std::size_t> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = i % 10;
            for (std::size_t j = 0; j < 20; ++j) x(i, j) = rng.normal();
        }
        rng.shuffle(std::span<std::size_t>(y));
        ProbeConfig cfg;
        cfg.seed = seed;
        const ProbeResult r = train_probe(x, y, random_split(n, 0.5, seed), cfg);
        CHECK(std::abs(r.test_accuracy - 0.10) <= 0.05);
        sum += r.test_accuracy;
    }
    CHECK(std::abs(sum / 5.0 - 0.10) <= 0.05);
}

TEST_CASE("train_probe: constant features predict the majority class") {
    const std::size_t n = 100;
    Matrix x(n, 3);
    for (auto& v : x.data()) v = 2.5;
    std::vector<std::size_t> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = (i % 10 < 7) ? 1 : (i % 10 < 9 ? 0 : 2);  // 70% class 1
    const ProbeResult r = train_probe(x, y, first_n(60, n), ProbeConfig{});
    CHECK(r.train_accuracy == doctest::Approx(0.7));
    CHECK(r.test_accuracy == doctest::Approx(0.7));
}

TEST_CASE("train_probe: invertible affine map keeps separable data separable") {
    Rng rng(77);
    Matrix x;
    std::vector<std::size_t> y;
    blobs(300, 4, 2.5, rng, x, y);
    const Matrix a(4, 4, {2, 1, 0, 0, 0, 3, 1, 0, 0, 0, 0.5, 1, 1, 0, 0, 4});  // upper-ish, det != 0
    Matrix z = linalg::matmul(x, a);
    for (std::size_t i = 0; i < z.rows(); ++i)
        for (std::size_t j = 0; j < 4; ++j) z(i, j) += 10.0 * static_cast<double>(j + 1);
    const Split s = first_n(200, 300);
    CHECK(train_probe(x, y, s, ProbeConfig{}).train_accuracy >= 0.99);
    CHECK(train_probe(z, y, s, ProbeConfig{}).train_accuracy >= 0.99);
}

TEST_CASE("train_probe: deterministic given the seed") {
    Rng rng(5);
    Matrix x;
    std::vector<std::size_t> y;
    blobs(200, 6, 0.5, rng, x, y);
    ProbeConfig cfg;
    cfg.seed = 42;
    const Split s = random_split(200, 0.3, 1);
    const ProbeResult a = train_probe(x, y, s, cfg);
    const ProbeResult b = train_probe(x, y, s, cfg);
    CHECK(a.train_accuracy == b.train_accuracy);
    CHECK(a.test_accuracy == b.test_accuracy);
}

TEST_CASE("train_probe: errors") {
    Matrix x(10, 2);
    std::vector<std::size_t> one_class(10, 3);
    CHECK(kind_of([&] { train_probe(x, one_class, first_n(5, 10), ProbeConfig{}); }) == ErrorKind::DegenerateLabels);
    std::vector<std::size_t> y = {0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
    CHECK(kind_of([&] { train_probe(x, y, first_n(10, 10), ProbeConfig{}); }) == ErrorKind::EmptySplit);
    CHECK(kind_of([&] { train_probe(x, std::vector<std::size_t>(9, 0), first_n(5, 10), ProbeConfig{}); }) ==
          ErrorKind::SampleMisalignment);
    ProbeConfig bad;
    bad.learning_rate = 0.0;
    CHECK(kind_of([&] { train_probe(x, y, first_n(5, 10), bad); }) == ErrorKind::InvalidConfig);
    bad = ProbeConfig{};
    bad.pool_cap = 0;
    CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::InvalidConfig);
}

TEST_CASE("probe_loss: analytic gradient matches central differences") {
    Rng rng(9);
    for (int trial = 0; trial < 5; ++trial) {
        const std::size_t n = 10, d = 8, classes = 4;
        Matrix f(n, d);
        for (auto& v : f.data()) v = rng.normal();
        std::vector<std::size_t> labels(n);
        for (auto& l : labels) l = rng.index(classes);
        std::vector<std::size_t> rows(n);
        std::iota(rows.begin(), rows.end(), std::size_t{0});
        LinearModel m{Matrix(classes, d), std::vector<double>(classes)};
        for (auto& v : m.weights.data()) v = 0.3 * rng.normal();
        for (auto& v : m.bias) v = 0.3 * rng.normal();
        const double l2 = 0.01;

        LinearModel g{Matrix(classes, d), std::vector<double>(classes)};
        probe_loss(m, f, labels, rows, l2, &g);
        auto loss = [&] { return probe_loss(m, f, labels, rows, l2, nullptr); };
        const auto gw = oracle::numeric_gradient(loss, m.weights.data());
        const auto gb = oracle::numeric_gradient(loss, m.bias);
        for (std::size_t i = 0; i < gw.size(); ++i) CHECK(oracle::grad_rel_error(g.weights.data()[i], gw[i]) < 1e-4);
        for (std::size_t i = 0; i < gb.size(); ++i) CHECK(oracle::grad_rel_error(g.bias[i], gb[i]) < 1e-4);
    }
}

TEST_CASE("random_split: sizes, disjointness, determinism") {
    const Split s = random_split(101, 0.3, 7);
    CHECK(s.test.size() == 30);
    CHECK(s.train.size() == 71);
    std::vector<int> seen(101, 0);
    for (auto i : s.train) ++seen[i];
    for (auto i : s.test) ++seen[i];
    CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
    CHECK(random_split(101, 0.3, 7).test == s.test);
}

TEST_CASE("probe_sweep: single layer, XOR gain, duplicates, misalignment") {
    Rng rng(13);
    const std::size_t n = 600;
    Tensor raw({n, 2});
    Tensor quad({n, 3});
    std::vector<std::size_t> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1);
        raw[i * 2] = a;
        raw[i * 2 + 1] = b;
        quad[i * 3] = a;
        quad[i * 3 + 1] = b;
        quad[i * 3 + 2] = a * b;  // the quadratic feature separates XOR
        y[i] = (a * b > 0) ? 1 : 0;
    }
    const Split s = random_split(n, 0.3, 3);
    ProbeConfig cfg;
    cfg.epochs = 100;

    const std::vector<LayerActivations> single = {{"input", raw}};
    const auto r1 = probe_sweep(single, y, s, cfg);
    REQUIRE(r1.size() == 1);
    CHECK(r1[0].layer == "input");

    const std::vector<LayerActivations> two = {{"input", raw}, {"quadratic", quad}};
    const auto r2 = probe_sweep(two, y, s, cfg);
    REQUIRE(r2.size() == 2);
    CHECK(r2[1].layer == "quadratic");
    CHECK(r2[1].test_accuracy - r2[0].test_accuracy >= 0.2);

    const std::vector<LayerActivations> dup = {{"a", quad}, {"b", quad}};
    const auto r3 = probe_sweep(dup, y, s, cfg);
    CHECK(r3[0].test_accuracy == r3[1].test_accuracy);
    CHECK(r3[0].train_accuracy == r3[1].train_accuracy);

    const std::vector<LayerActivations> bad = {{"a", raw}, {"short", Tensor({n - 1, 2})}};
    CHECK(kind_of([&] { probe_sweep(bad, y, s, cfg); }) == ErrorKind::SampleMisalignment);
}
