#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "satlab/nn/network.hpp"

namespace satlab::nn {

enum class OptimizerKind { Sgd, Adam };

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct SgdState {
    std::vector<double> velocity;
};

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::size_t t = 0;
};

/// p ← p − lr·(momentum·v + g); plain SGD when momentum is 0.
void sgd_step(std::span<double> params, std::span<const double> grads, SgdState& state, double lr, double momentum = 0.0);

/// Bias-corrected Adam update.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr,
               const AdamConfig& cfg = {});

/// Per-parameter optimizer state for a whole network.
class Optimizer {
public:
    Optimizer(OptimizerKind kind, double momentum = 0.0, AdamConfig adam = {});
    void step(std::span<Parameter* const> params, double lr);

private:
    OptimizerKind kind_;
    double momentum_;
    AdamConfig adam_;
    std::vector<SgdState> sgd_;
    std::vector<AdamState> adam_state_;
};

}  // namespace satlab::nn
