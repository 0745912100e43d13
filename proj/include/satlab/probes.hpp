#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "satlab/linalg.hpp"
#include "satlab/tensor.hpp"

namespace satlab::probes {

struct ProbeConfig {
    double learning_rate = 0.1;
    std::size_t epochs = 40;
    std::size_t batch_size = 256;
    double l2 = 1e-4;
    /// Max spatial grid per side after adaptive average pooling.
    std::size_t pool_cap = 4;
    std::uint64_t seed = 0;

    void validate() const;
};

struct ProbeResult {
    std::string layer;
    double train_accuracy = 0.0;
    /// p_l
    double test_accuracy = 0.0;
    std::size_t feature_dim = 0;
    std::size_t pool_cap = 0;
};

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Seeded partition of n samples with round(test_fraction·n) test samples.
Split random_split(std::size_t n, double test_fraction, std::uint64_t seed);

/// 2-D batches pass through; 4-D batches are adaptively average-pooled to at
/// most cap×cap and flattened channel-major to N×(C·h·w).
linalg::Matrix probe_features(const ActivationBatch& batch, std::size_t cap);

/// Softmax regression parameters: weights (classes×features) and biases.
struct LinearModel {
    linalg::Matrix weights;
    std::vector<double> bias;
};

/// Mean softmax cross-entropy over the selected rows plus l2/2·‖W‖²,
/// with its analytic gradient written into `grad`.
double probe_loss(const LinearModel& model, const linalg::Matrix& features, std::span<const std::size_t> labels,
                  std::span<const std::size_t> rows, double l2, LinearModel* grad);

std::size_t predict(const LinearModel& model, std::span<const double> x);

/// Trains on `split.train` (features standardized with train-split
/// statistics) and reports top-1 accuracy on both halves.
ProbeResult train_probe(const linalg::Matrix& features, std::span<const std::size_t> labels, const Split& split,
                        const ProbeConfig& cfg, std::string layer = {});

struct LayerActivations {
    std::string layer;
    ActivationBatch batch;
};

/// One probe per layer, in the order given.
std::vector<ProbeResult> probe_sweep(std::span<const LayerActivations> dumps, std::span<const std::size_t> labels,
                                     const Split& split, const ProbeConfig& cfg);

}  // namespace satlab::probes
