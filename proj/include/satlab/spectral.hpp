#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "satlab/linalg.hpp"
#include "satlab/tensor.hpp"

namespace satlab::spectral {

inline constexpr double kDefaultDelta = 0.99;

/// Convolutional maps are analyzed with every spatial position as one sample
/// over the channel dimension. Written into reports next to the results.
inline constexpr const char* kConvLayoutConvention = "spatial-positions-as-samples";

/// Running first and second moments of one layer's activations.
/// Single writer; combine per-shard accumulators with `merge`.
class CovarianceAccumulator {
public:
    explicit CovarianceAccumulator(std::size_t dim);

    std::size_t dim() const noexcept { return dim_; }
    std::uint64_t count() const noexcept { return n_; }
    std::span<const double> sum() const noexcept { return sum_; }
    const linalg::Matrix& outer_sum() const noexcept { return outer_; }

    /// Adds a batch. 2-D batches are N×dim; 4-D batches (N×C×H×W) go
    /// through `reshape_conv` first so dim must equal C.
    void accumulate(const ActivationBatch& batch);
    /// Adds `rows` samples stored contiguously (rows×dim, row-major).
    void accumulate_rows(std::span<const double> values, std::size_t rows);
    void merge_from(const CovarianceAccumulator& other);

    /// Population covariance Σxxᵀ/n − μμᵀ, symmetrized.
    linalg::Matrix finalize() const;

private:
    std::size_t dim_;
    std::uint64_t n_ = 0;
    std::vector<double> sum_;
    linalg::Matrix outer_;
};

CovarianceAccumulator merge(const CovarianceAccumulator& a, const CovarianceAccumulator& b);

struct SaturationResult {
    std::string layer;
    std::size_t extrinsic_dim = 0;
    std::size_t relevant_dim = 0;
    double saturation = 0.0;
    linalg::EigenSpectrum spectrum;
    double delta = kDefaultDelta;
};

/// Saturation of one layer: the smallest number of top eigendirections of
/// `cov` explaining at least `delta` of the variance, over `extrinsic_dim`.
SaturationResult saturation(const linalg::Matrix& cov, std::size_t extrinsic_dim, double delta = kDefaultDelta,
                            std::string layer = {});

/// N×C×H×W → (N·H·W)×C, sample order (n, h, w).
ActivationBatch reshape_conv(const ActivationBatch& batch);

double average_saturation(std::span<const SaturationResult> results);

struct TailReport {
    std::optional<std::size_t> start_index;
    std::vector<std::string> member_layers;
    /// Half the mean saturation of all other layers, one entry per layer.
    std::vector<double> threshold_per_layer;
    std::vector<bool> low_saturated;
};

TailReport detect_tail(std::span<const SaturationResult> results);
/// Same rule on bare saturation values; names default to the layer index.
TailReport detect_tail(std::span<const double> saturations, std::span<const std::string> names = {});

}  // namespace satlab::spectral
