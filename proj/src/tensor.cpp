#include "satlab/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

#include "satlab/error.hpp"

namespace satlab {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const std::vector<std::size_t>& shape) {
    std::string out;
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(shape[i]);
    }
    return out;
}

Tensor::Tensor(std::vector<std::size_t> shape)
    : shape_(std::move(shape)), values_(shape_product(shape_), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
    if (values_.size() != shape_product(shape_)) {
        throw Error(ErrorKind::ShapeMismatch, "tensor of shape " + shape_to_string(shape_) +
                                                  " given " + std::to_string(values_.size()) + " values");
    }
}

std::size_t Tensor::sample_size() const noexcept {
    if (shape_.empty()) return 0;
    std::size_t n = 1;
    for (std::size_t i = 1; i < shape_.size(); ++i) n *= shape_[i];
    return n;
}

std::span<const double> Tensor::sample(std::size_t n) const {
    const std::size_t stride = sample_size();
    return std::span<const double>(values_).subspan(n * stride, stride);
}

std::span<double> Tensor::sample(std::size_t n) {
    const std::size_t stride = sample_size();
    return std::span<double>(values_).subspan(n * stride, stride);
}

Tensor Tensor::gather(std::span<const std::size_t> rows) const {
    auto shape = shape_;
    shape[0] = rows.size();
    Tensor out(std::move(shape));
    const std::size_t stride = sample_size();
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto src = sample(rows[i]);
        std::copy(src.begin(), src.end(), out.values_.begin() + static_cast<std::ptrdiff_t>(i * stride));
    }
    return out;
}

}  // namespace satlab
