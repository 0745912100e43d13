#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace satlab {

/// Dense row-major tensor of 64-bit reals. Used for network batches
/// (N×d or N×C×H×W) and for activation batches handed to the analyzers.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape);
    Tensor(std::vector<std::size_t> shape, std::vector<double> values);

    const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    std::size_t ndim() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t i) const { return shape_.at(i); }
    std::size_t size() const noexcept { return values_.size(); }

    /// Leading dimension (sample count); 0 for an empty tensor.
    std::size_t samples() const noexcept { return shape_.empty() ? 0 : shape_[0]; }
    /// Elements per sample.
    std::size_t sample_size() const noexcept;

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }
    std::vector<double>& storage() noexcept { return values_; }

    std::span<const double> sample(std::size_t n) const;
    std::span<double> sample(std::size_t n);

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    /// Copy of the selected samples, in the given order.
    Tensor gather(std::span<const std::size_t> rows) const;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> values_;
};

using ActivationBatch = Tensor;

std::size_t shape_product(const std::vector<std::size_t>& shape);
std::string shape_to_string(const std::vector<std::size_t>& shape);

}  // namespace satlab
