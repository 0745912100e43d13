#include "satlab/probes.hpp"

#include <algorithm>
#include <cmath>

#include "kernels.hpp"
#include "satlab/error.hpp"
#include "satlab/random.hpp"

namespace satlab::probes {

void ProbeConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw Error(ErrorKind::InvalidConfig, "probe learning_rate must be positive");
    }
    if (epochs < 1) throw Error(ErrorKind::InvalidConfig, "probe epochs must be at least 1");
    if (batch_size < 1) throw Error(ErrorKind::InvalidConfig, "probe batch_size must be at least 1");
    if (pool_cap < 1) throw Error(ErrorKind::InvalidConfig, "probe pool_cap must be at least 1");
    if (l2 < 0.0) throw Error(ErrorKind::InvalidConfig, "probe l2 must be non-negative");
}

Split random_split(std::size_t n, double test_fraction, std::uint64_t seed) {
    Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
    auto perm = rng.permutation(n);
    const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
    Split split;
    split.test.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_test));
    split.train.assign(perm.begin() + static_cast<std::ptrdiff_t>(n_test), perm.end());
    std::sort(split.test.begin(), split.test.end());
    std::sort(split.train.begin(), split.train.end());
    return split;
}

linalg::Matrix probe_features(const ActivationBatch& batch, std::size_t cap) {
    if (cap < 1) throw Error(ErrorKind::InvalidConfig, "pool cap must be at least 1");
    if (batch.ndim() == 2) {
        return linalg::Matrix(batch.dim(0), batch.dim(1),
                              std::vector<double>(batch.values().begin(), batch.values().end()));
    }
    if (batch.ndim() != 4) {
        throw Error(ErrorKind::BadLayout,
                    "probe features need a 2-D or 4-D batch, got " + shape_to_string(batch.shape()));
    }
    const std::size_t n = batch.dim(0), c = batch.dim(1), h = batch.dim(2), w = batch.dim(3);
    const std::size_t oh = std::min(cap, h), ow = std::min(cap, w);
    linalg::Matrix out(n, c * oh * ow);
    auto src = batch.values();
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t ch = 0; ch < c; ++ch) {
            const double* plane = src.data() + (s * c + ch) * h * w;
            for (std::size_t i = 0; i < oh; ++i) {
                // Adaptive pooling bins: [floor(i·H/oh), ceil((i+1)·H/oh)).
                const std::size_t r0 = i * h / oh, r1 = ((i + 1) * h + oh - 1) / oh;
                for (std::size_t j = 0; j < ow; ++j) {
                    const std::size_t c0 = j * w / ow, c1 = ((j + 1) * w + ow - 1) / ow;
                    double acc = 0.0;
                    for (std::size_t r = r0; r < r1; ++r)
                        for (std::size_t q = c0; q < c1; ++q) acc += plane[r * w + q];
                    out(s, (ch * oh + i) * ow + j) = acc / static_cast<double>((r1 - r0) * (c1 - c0));
                }
            }
        }
    }
    return out;
}

double probe_loss(const LinearModel& model, const linalg::Matrix& features, std::span<const std::size_t> labels,
                  std::span<const std::size_t> rows, double l2, LinearModel* grad) {
    const std::size_t k = model.weights.rows();
    const std::size_t d = model.weights.cols();
    const std::size_t m = rows.size();
    if (features.cols() != d) throw Error(ErrorKind::DimMismatch, "probe feature width does not match model");

    std::vector<double> x(m * d);
    for (std::size_t r = 0; r < m; ++r) {
        auto src = features.row(rows[r]);
        std::copy(src.begin(), src.end(), x.begin() + static_cast<std::ptrdiff_t>(r * d));
    }
    // logits = X·Wᵀ + b
    std::vector<double> logits(m * k);
    for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < k; ++c) logits[r * k + c] = model.bias[c];
    if (m > 0 && d > 0) {
        detail::gemm(detail::Op::N, detail::Op::T, m, k, d, 1.0, x.data(), d, model.weights.data().data(), d, 1.0,
                     logits.data(), k);
    }
    double loss = 0.0;
    const double inv_m = m ? 1.0 / static_cast<double>(m) : 0.0;
    for (std::size_t r = 0; r < m; ++r) {
        double* z = logits.data() + r * k;
        const double zmax = *std::max_element(z, z + k);
        double denom = 0.0;
        for (std::size_t c = 0; c < k; ++c) denom += std::exp(z[c] - zmax);
        const std::size_t y = labels[rows[r]];
        loss -= (z[y] - zmax - std::log(denom));
        // z becomes dL/dz for this row
        for (std::size_t c = 0; c < k; ++c) z[c] = (std::exp(z[c] - zmax) / denom - (c == y ? 1.0 : 0.0)) * inv_m;
    }
    loss *= inv_m;
    double wsq = 0.0;
    for (double w : model.weights.data()) wsq += w * w;
    loss += 0.5 * l2 * wsq;

    if (grad) {
        grad->weights = linalg::Matrix(k, d);
        grad->bias.assign(k, 0.0);
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < k; ++c) grad->bias[c] += logits[r * k + c];
        auto gw = grad->weights.data();
        auto w = model.weights.data();
        for (std::size_t i = 0; i < gw.size(); ++i) gw[i] = l2 * w[i];
        if (m > 0 && d > 0) {
            detail::gemm(detail::Op::T, detail::Op::N, k, d, m, 1.0, logits.data(), k, x.data(), d, 1.0, gw.data(), d);
        }
    }
    return loss;
}

std::size_t predict(const LinearModel& model, std::span<const double> x) {
    std::size_t best = 0;
    double best_z = -INFINITY;
    for (std::size_t c = 0; c < model.weights.rows(); ++c) {
        double z = model.bias[c];
        auto w = model.weights.row(c);
        for (std::size_t i = 0; i < x.size(); ++i) z += w[i] * x[i];
        if (z > best_z) {
            best_z = z;
            best = c;
        }
    }
    return best;
}

namespace {

double accuracy(const LinearModel& model, const linalg::Matrix& x, std::span<const std::size_t> labels,
                std::span<const std::size_t> rows) {
    std::size_t hits = 0;
    for (auto r : rows) hits += predict(model, x.row(r)) == labels[r];
    return static_cast<double>(hits) / static_cast<double>(rows.size());
}

void check_split(const Split& split, std::size_t n) {
    if (split.train.empty() || split.test.empty())
        throw Error(ErrorKind::EmptySplit, "train and test splits must be non-empty");
    std::vector<char> seen(n, 0);
    for (auto part : {&split.train, &split.test}) {
        for (auto i : *part) {
            if (i >= n)
                throw Error(ErrorKind::SampleMisalignment, "split index " + std::to_string(i) + " out of range");
            if (seen[i]) throw Error(ErrorKind::InvalidConfig, "split assigns sample " + std::to_string(i) + " twice");
            seen[i] = 1;
        }
    }
}

}  // namespace

ProbeResult train_probe(const linalg::Matrix& features, std::span<const std::size_t> labels, const Split& split,
                        const ProbeConfig& cfg, std::string layer) {
    cfg.validate();
    const std::size_t n = features.rows();
    const std::size_t d = features.cols();
    if (labels.size() != n) {
        throw Error(ErrorKind::SampleMisalignment,
                    std::to_string(labels.size()) + " labels for " + std::to_string(n) + " samples");
    }
    if (d == 0) throw Error(ErrorKind::BadLayout, "probe features are empty");
    check_split(split, n);

    std::size_t classes = 0;
    for (auto y : labels) classes = std::max(classes, y + 1);
    {
        const std::size_t first = labels[split.train.front()];
        const bool single =
            std::all_of(split.train.begin(), split.train.end(), [&](auto i) { return labels[i] == first; });
        if (single) throw Error(ErrorKind::DegenerateLabels, "training split contains a single class");
    }

    // Standardize with training-split statistics.
    std::vector<double> mean(d, 0.0), scale(d, 1.0);
    for (auto r : split.train) {
        auto row = features.row(r);
        for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
    }
    const double nt = static_cast<double>(split.train.size());
    for (auto& m : mean) m /= nt;
    std::vector<double> var(d, 0.0);
    for (auto r : split.train) {
        auto row = features.row(r);
        for (std::size_t j = 0; j < d; ++j) var[j] += (row[j] - mean[j]) * (row[j] - mean[j]);
    }
    for (std::size_t j = 0; j < d; ++j) {
        const double sd = std::sqrt(var[j] / nt);
        scale[j] = sd > 1e-12 ? 1.0 / sd : 1.0;
    }
    linalg::Matrix x(n, d);
    for (std::size_t r = 0; r < n; ++r) {
        auto row = features.row(r);
        for (std::size_t j = 0; j < d; ++j) x(r, j) = (row[j] - mean[j]) * scale[j];
    }

    LinearModel model{linalg::Matrix(classes, d), std::vector<double>(classes, 0.0)};
    LinearModel grad;
    Rng rng(cfg.seed);
    std::vector<std::size_t> order = split.train;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            std::span<const std::size_t> rows(order.data() + start, stop - start);
            probe_loss(model, x, labels, rows, cfg.l2, &grad);
            auto w = model.weights.data();
            auto gw = grad.weights.data();
            for (std::size_t i = 0; i < w.size(); ++i) w[i] -= cfg.learning_rate * gw[i];
            for (std::size_t c = 0; c < classes; ++c) model.bias[c] -= cfg.learning_rate * grad.bias[c];
        }
    }

    ProbeResult result;
    result.layer = std::move(layer);
    result.train_accuracy = accuracy(model, x, labels, split.train);
    result.test_accuracy = accuracy(model, x, labels, split.test);
    result.feature_dim = d;
    result.pool_cap = cfg.pool_cap;
    return result;
}

std::vector<ProbeResult> probe_sweep(std::span<const LayerActivations> dumps, std::span<const std::size_t> labels,
                                     const Split& split, const ProbeConfig& cfg) {
    std::vector<ProbeResult> out;
    for (const auto& d : dumps) {
        if (d.batch.samples() != labels.size()) {
            throw Error(ErrorKind::SampleMisalignment, "layer '" + d.layer + "' has " +
                                                           std::to_string(d.batch.samples()) + " samples, labels " +
                                                           std::to_string(labels.size()));
        }
    }
    for (const auto& d : dumps)
        out.push_back(train_probe(probe_features(d.batch, cfg.pool_cap), labels, split, cfg, d.layer));
    return out;
}

}  // namespace satlab::probes
