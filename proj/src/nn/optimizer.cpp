#include "satlab/nn/optimizer.hpp"

#include <cmath>

#include "satlab/error.hpp"

namespace satlab::nn {

void sgd_step(std::span<double> params, std::span<const double> grads, SgdState& state, double lr, double momentum) {
    if (params.size() != grads.size()) throw Error(ErrorKind::ShapeMismatch, "sgd: parameter/gradient size mismatch");
    if (momentum == 0.0) {
        for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grads[i];
        return;
    }
    if (state.velocity.size() != params.size()) state.velocity.assign(params.size(), 0.0);
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.velocity[i] = momentum * state.velocity[i] + grads[i];
        params[i] -= lr * state.velocity[i];
    }
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, double lr,
               const AdamConfig& cfg) {
    if (params.size() != grads.size()) throw Error(ErrorKind::ShapeMismatch, "adam: parameter/gradient size mismatch");
    if (state.m.size() != params.size()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
        state.t = 0;
    }
    ++state.t;
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
        const double m_hat = state.m[i] / c1;
        const double v_hat = state.v[i] / c2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
}

Optimizer::Optimizer(OptimizerKind kind, double momentum, AdamConfig adam)
    : kind_(kind), momentum_(momentum), adam_(adam) {}

void Optimizer::step(std::span<Parameter* const> params, double lr) {
    if (kind_ == OptimizerKind::Sgd) {
        sgd_.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) sgd_step(params[i]->value, params[i]->grad, sgd_[i], lr, momentum_);
    } else {
        adam_state_.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i)
            adam_step(params[i]->value, params[i]->grad, adam_state_[i], lr, adam_);
    }
}

}  // namespace satlab::nn
