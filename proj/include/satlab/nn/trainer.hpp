#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "satlab/error.hpp"
#include "satlab/nn/dataset.hpp"
#include "satlab/nn/network.hpp"
#include "satlab/nn/optimizer.hpp"
#include "satlab/probes.hpp"
#include "satlab/spectral.hpp"

namespace satlab::nn {

enum class Augmentation { None, Normalize, NormalizeCropFlip };

std::string_view to_string(Augmentation a);
std::string_view to_string(OptimizerKind k);

struct StepDecay {
    /// 0 disables decay.
    std::size_t every_epochs = 0;
    double factor = 1.0;
};

struct TrainConfig {
    OptimizerKind optimizer = OptimizerKind::Sgd;
    double learning_rate = 0.1;
    double momentum = 0.0;
    StepDecay lr_decay;
    std::size_t batch_size = 64;
    std::size_t epochs = 30;
    std::uint64_t seed = 0;
    Augmentation augmentation = Augmentation::None;
    /// Measurement pass: fixed training subset size, threshold, on/off.
    std::size_t measure_samples = 10000;
    double delta = spectral::kDefaultDelta;
    bool measure = true;

    void validate() const;
};

/// Learning rate in effect during `epoch` (1-based).
double learning_rate_at(const TrainConfig& cfg, std::size_t epoch);

struct EpochRecord {
    std::size_t epoch = 0;
    double learning_rate = 0.0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_accuracy = 0.0;
    std::vector<spectral::SaturationResult> per_layer_saturation;
};

/// Thrown when the training loss becomes non-finite; carries the epochs
/// completed before divergence.
class DivergedLossError : public Error {
public:
    DivergedLossError(std::size_t epoch, std::vector<EpochRecord> partial);
    const std::vector<EpochRecord>& partial() const noexcept { return partial_; }

private:
    std::vector<EpochRecord> partial_;
};

struct EvalResult {
    double loss = 0.0;
    double accuracy = 0.0;
};

EvalResult evaluate(Network& net, const DataSplit& split, std::size_t batch_size = 256);

/// Forward-only pass over `inputs` feeding one covariance accumulator per
/// captured layer, then saturation per layer. Does not touch weights.
std::vector<spectral::SaturationResult> measure_saturation(Network& net, const Tensor& inputs, double delta,
                                                           std::size_t batch_size = 256);

/// The fixed measurement subset: the first min(limit, n) indices of a
/// permutation drawn from its own seed stream.
std::vector<std::size_t> measurement_indices(std::size_t n, std::size_t limit, std::uint64_t seed);

/// Applies the configured preprocessing (channel normalization) to a dataset.
Dataset prepare(const Dataset& data, Augmentation aug);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Runs the configured protocol on an already-prepared dataset and returns
/// one record per epoch.
std::vector<EpochRecord> train(Network& net, const Dataset& data, const TrainConfig& cfg,
                               const EpochCallback& on_epoch = {});

/// Captured activations of every layer for the given inputs.
std::vector<CapturedActivation> capture_activations(Network& net, const Tensor& inputs, std::size_t batch_size = 256);

/// Probe features (pooled to `pool_cap`) for every captured layer, built
/// chunk by chunk so full 4-D activations never sit in memory at once.
std::vector<linalg::Matrix> capture_probe_features(Network& net, const Tensor& inputs, std::size_t pool_cap,
                                                   std::size_t batch_size = 256);

}  // namespace satlab::nn
