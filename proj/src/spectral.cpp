#include "satlab/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kernels.hpp"
#include "satlab/error.hpp"

namespace satlab::spectral {

CovarianceAccumulator::CovarianceAccumulator(std::size_t dim) : dim_(dim), sum_(dim, 0.0), outer_(dim, dim) {}

void CovarianceAccumulator::accumulate(const ActivationBatch& batch) {
    if (batch.ndim() == 4) {
        const ActivationBatch flat = reshape_conv(batch);
        accumulate_rows(flat.values(), flat.samples());
        return;
    }
    if (batch.ndim() != 2) {
        throw Error(ErrorKind::BadLayout, "activation batch must be 2-D or 4-D, got " + shape_to_string(batch.shape()));
    }
    if (batch.dim(1) != dim_) {
        throw Error(ErrorKind::DimMismatch,
                    "batch has " + std::to_string(batch.dim(1)) + " features, accumulator " + std::to_string(dim_));
    }
    accumulate_rows(batch.values(), batch.samples());
}

void CovarianceAccumulator::accumulate_rows(std::span<const double> values, std::size_t rows) {
    if (values.size() != rows * dim_) {
        throw Error(ErrorKind::DimMismatch, std::to_string(values.size()) + " values do not form " +
                                                std::to_string(rows) + " rows of " + std::to_string(dim_));
    }
    if (rows == 0) return;
    for (double v : values) {
        if (!std::isfinite(v)) throw Error(ErrorKind::NonFiniteActivation, "activation batch contains NaN or Inf");
    }
    for (std::size_t r = 0; r < rows; ++r) {
        const double* x = values.data() + r * dim_;
        for (std::size_t i = 0; i < dim_; ++i) sum_[i] += x[i];
    }
    // Upper triangle of XᵀX, then mirrored so the stored matrix is exactly symmetric.
    detail::syrk_upper(dim_, rows, values.data(), dim_, outer_.data().data(), dim_);
    for (std::size_t i = 0; i < dim_; ++i)
        for (std::size_t j = i + 1; j < dim_; ++j) outer_(j, i) = outer_(i, j);
    n_ += rows;
}

void CovarianceAccumulator::merge_from(const CovarianceAccumulator& other) {
    if (other.dim_ != dim_) {
        throw Error(ErrorKind::DimMismatch,
                    "cannot merge accumulators of dim " + std::to_string(dim_) + " and " + std::to_string(other.dim_));
    }
    n_ += other.n_;
    for (std::size_t i = 0; i < dim_; ++i) sum_[i] += other.sum_[i];
    auto dst = outer_.data();
    auto src = other.outer_.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

CovarianceAccumulator merge(const CovarianceAccumulator& a, const CovarianceAccumulator& b) {
    CovarianceAccumulator out = a;
    out.merge_from(b);
    return out;
}

linalg::Matrix CovarianceAccumulator::finalize() const {
    if (n_ < 2) {
        throw Error(ErrorKind::InsufficientSamples, "covariance needs at least 2 samples, have " + std::to_string(n_));
    }
    const double n = static_cast<double>(n_);
    std::vector<double> mean(dim_);
    for (std::size_t i = 0; i < dim_; ++i) mean[i] = sum_[i] / n;
    linalg::Matrix cov(dim_, dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
        for (std::size_t j = i; j < dim_; ++j) {
            const double upper = outer_(i, j) / n - mean[i] * mean[j];
            const double lower = outer_(j, i) / n - mean[j] * mean[i];
            const double v = 0.5 * (upper + lower);
            cov(i, j) = v;
            cov(j, i) = v;
        }
    }
    return cov;
}

SaturationResult saturation(const linalg::Matrix& cov, std::size_t extrinsic_dim, double delta, std::string layer) {
    if (!(delta > 0.0 && delta <= 1.0)) {
        throw Error(ErrorKind::InvalidConfig, "delta must lie in (0, 1], got " + std::to_string(delta));
    }
    if (!cov.square() || cov.rows() != extrinsic_dim) {
        throw Error(ErrorKind::DimMismatch, "covariance is " + std::to_string(cov.rows()) + "x" +
                                                std::to_string(cov.cols()) + ", extrinsic dim " +
                                                std::to_string(extrinsic_dim));
    }
    SaturationResult result;
    result.layer = std::move(layer);
    result.extrinsic_dim = extrinsic_dim;
    result.delta = delta;
    result.spectrum = linalg::eigh(cov);

    const auto& values = result.spectrum.values;
    if (result.spectrum.total <= linalg::kZeroVariance || extrinsic_dim == 0) {
        result.relevant_dim = 0;
        result.saturation = 0.0;
        return result;
    }
    std::size_t k = values.size();
    double prefix = 0.0;
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
        prefix += values[i];
        if (prefix / result.spectrum.total >= delta) {
            k = i + 1;
            break;
        }
    }
    result.relevant_dim = k;
    result.saturation = static_cast<double>(k) / static_cast<double>(extrinsic_dim);
    return result;
}

ActivationBatch reshape_conv(const ActivationBatch& batch) {
    if (batch.ndim() != 4) {
        throw Error(ErrorKind::BadLayout, "expected N×C×H×W, got " + shape_to_string(batch.shape()));
    }
    const std::size_t n = batch.dim(0), c = batch.dim(1), h = batch.dim(2), w = batch.dim(3);
    const std::size_t plane = h * w;
    ActivationBatch out({n * plane, c});
    auto src = batch.values();
    auto dst = out.values();
    for (std::size_t s = 0; s < n; ++s) {
        const double* in = src.data() + s * c * plane;
        double* o = dst.data() + s * plane * c;
        for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t p = 0; p < plane; ++p) o[p * c + ch] = in[ch * plane + p];
    }
    return out;
}

double average_saturation(std::span<const SaturationResult> results) {
    if (results.empty()) throw Error(ErrorKind::EmptyInput, "average saturation of zero layers");
    double s = 0.0;
    for (const auto& r : results) s += r.saturation;
    return s / static_cast<double>(results.size());
}

TailReport detect_tail(std::span<const double> saturations, std::span<const std::string> names) {
    const std::size_t L = saturations.size();
    if (L < 3) throw Error(ErrorKind::TooFewLayers, "tail detection needs at least 3 layers, got " + std::to_string(L));
    const double total = std::accumulate(saturations.begin(), saturations.end(), 0.0);

    TailReport report;
    report.threshold_per_layer.resize(L);
    report.low_saturated.resize(L);
    for (std::size_t l = 0; l < L; ++l) {
        const double others = (total - saturations[l]) / static_cast<double>(L - 1);
        report.threshold_per_layer[l] = 0.5 * others;
        report.low_saturated[l] = saturations[l] < report.threshold_per_layer[l];
    }
    std::size_t start = L;
    while (start > 0 && report.low_saturated[start - 1]) --start;
    if (L - start >= 2) {
        report.start_index = start;
        for (std::size_t l = start; l < L; ++l) {
            report.member_layers.push_back(l < names.size() ? names[l] : std::to_string(l));
        }
    }
    return report;
}

TailReport detect_tail(std::span<const SaturationResult> results) {
    std::vector<double> s;
    std::vector<std::string> names;
    for (const auto& r : results) {
        s.push_back(r.saturation);
        names.push_back(r.layer);
    }
    return detect_tail(s, names);
}

}  // namespace satlab::spectral
