#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "satlab/rf.hpp"
#include "satlab/tensor.hpp"

namespace satlab::nn {

enum class LayerType { Dense, Conv, MaxPool, Relu, Flatten, Classifier };

std::string_view to_string(LayerType t);

struct LayerDef {
    std::string name;
    LayerType type = LayerType::Dense;
    /// units (dense) or filters (conv); unused otherwise.
    std::size_t width = 0;
    std::size_t kernel = 1;
    std::size_t stride = 1;
    std::size_t padding = 0;
};

/// Filter/unit multiplier 1/divisor, divisor ∈ {1, 2, 4, 8, 16}.
struct WidthScale {
    std::size_t divisor = 1;

    static WidthScale parse(std::string_view text);
    double value() const { return 1.0 / static_cast<double>(divisor); }
    std::string label() const;
    /// ceil(width / divisor), at least 1.
    std::size_t apply(std::size_t width) const;
    friend bool operator==(const WidthScale&, const WidthScale&) = default;
};

struct NetworkSpec {
    std::vector<LayerDef> layers;
    WidthScale width_scale;

    /// Copy with `scale` applied to every conv/dense width except the classifier.
    NetworkSpec scaled(WidthScale scale) const;
    /// Geometry view for receptive-field analysis.
    rf::ArchitectureSpec geometry() const;
};

struct Parameter {
    std::vector<double> value;
    std::vector<double> grad;
};

class Layer {
public:
    virtual ~Layer() = default;
    /// Per-sample output shape for a per-sample input shape.
    virtual std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const = 0;
    /// Caches what `backward` needs when `training` is set.
    virtual Tensor forward(const Tensor& x, bool training) = 0;
    /// Accumulates parameter gradients and returns the input gradient.
    virtual Tensor backward(const Tensor& grad_out) = 0;
    virtual std::vector<Parameter*> parameters() { return {}; }
};

struct CapturedActivation {
    std::string layer;
    Tensor values;
};

struct ForwardResult {
    Tensor logits;
    /// Post-activation output of every non-classifier conv/dense layer.
    std::vector<CapturedActivation> activations;
};

struct LossResult {
    double loss = 0.0;
    Tensor grad_logits;
};

/// Mean softmax cross-entropy and its gradient with respect to the logits.
LossResult softmax_cross_entropy(const Tensor& logits, std::span<const std::size_t> labels);

class Network {
public:
    /// `input_shape` is per sample: {d} or {C, H, W}.
    Network(const NetworkSpec& spec, std::vector<std::size_t> input_shape, std::size_t classes, std::uint64_t seed);

    ForwardResult forward(const Tensor& batch, bool capture, bool training = false);
    Tensor logits(const Tensor& batch) { return forward(batch, false, false).logits; }

    /// Forward + loss + backward; gradients are overwritten, not accumulated.
    double loss_and_gradients(const Tensor& batch, std::span<const std::size_t> labels);
    double loss(const Tensor& batch, std::span<const std::size_t> labels);

    std::vector<Parameter*> parameters();
    void zero_gradients();

    std::size_t classes() const noexcept { return classes_; }
    const std::vector<std::size_t>& input_shape() const noexcept { return input_shape_; }
    const std::vector<std::string>& captured_layers() const noexcept { return capture_names_; }
    /// Per-sample shape of each captured activation.
    const std::vector<std::vector<std::size_t>>& captured_shapes() const noexcept { return capture_shapes_; }
    std::size_t parameter_count();

private:
    std::vector<std::unique_ptr<Layer>> layers_;
    std::vector<std::size_t> input_shape_;
    std::size_t classes_;
    // Layer index whose output is captured, and its public name.
    std::vector<std::size_t> capture_at_;
    std::vector<std::string> capture_names_;
    std::vector<std::vector<std::size_t>> capture_shapes_;
};

}  // namespace satlab::nn
