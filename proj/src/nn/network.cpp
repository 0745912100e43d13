#include "satlab/nn/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kernels.hpp"
#include "satlab/error.hpp"
#include "satlab/random.hpp"

namespace satlab::nn {

std::string_view to_string(LayerType t) {
    switch (t) {
        case LayerType::Dense:
            return "dense";
        case LayerType::Conv:
            return "conv";
        case LayerType::MaxPool:
            return "maxpool";
        case LayerType::Relu:
            return "relu";
        case LayerType::Flatten:
            return "flatten";
        case LayerType::Classifier:
            return "classifier";
    }
    return "?";
}

WidthScale WidthScale::parse(std::string_view text) {
    std::size_t divisor = 0;
    if (text == "1") {
        divisor = 1;
    } else if (text.starts_with("1/")) {
        const auto rest = text.substr(2);
        for (std::size_t d : {1, 2, 4, 8, 16}) {
            if (rest == std::to_string(d)) divisor = d;
        }
    }
    if (divisor == 0) {
        throw Error(ErrorKind::InvalidConfig,
                    "width_scale must be one of 1, 1/2, 1/4, 1/8, 1/16, got '" + std::string(text) + "'");
    }
    return WidthScale{divisor};
}

std::string WidthScale::label() const {
    return divisor == 1 ? "1" : "1/" + std::to_string(divisor);
}

std::size_t WidthScale::apply(std::size_t width) const {
    return std::max<std::size_t>(1, (width + divisor - 1) / divisor);
}

NetworkSpec NetworkSpec::scaled(WidthScale scale) const {
    NetworkSpec out = *this;
    out.width_scale = scale;
    return out;
}

rf::ArchitectureSpec NetworkSpec::geometry() const {
    rf::ArchitectureSpec arch;
    for (const auto& l : layers) {
        rf::LayerGeometry g;
        g.name = l.name;
        switch (l.type) {
            case LayerType::Conv:
                g.kind = rf::LayerKind::Conv;
                break;
            case LayerType::MaxPool:
                g.kind = rf::LayerKind::Pool;
                break;
            case LayerType::Dense:
            case LayerType::Classifier:
                g.kind = rf::LayerKind::Dense;
                break;
            case LayerType::Relu:
                g.kind = rf::LayerKind::Activation;
                break;
            case LayerType::Flatten:
                g.kind = rf::LayerKind::Flatten;
                break;
        }
        g.kernel = l.kernel;
        g.stride = l.stride;
        g.padding = l.padding;
        arch.push_back(std::move(g));
    }
    return arch;
}

namespace {

std::size_t product(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (auto d : s) n *= d;
    return n;
}

std::vector<std::size_t> with_batch(std::size_t n, const std::vector<std::size_t>& per_sample) {
    std::vector<std::size_t> shape{n};
    shape.insert(shape.end(), per_sample.begin(), per_sample.end());
    return shape;
}

void init_uniform(std::vector<double>& w, double bound, Rng& rng) {
    for (auto& v : w) v = rng.uniform(-bound, bound);
}

class DenseLayer final : public Layer {
public:
    DenseLayer(std::size_t in, std::size_t out, double gain, Rng& rng) : in_(in), out_(out) {
        weight_.value.resize(out * in);
        weight_.grad.assign(out * in, 0.0);
        bias_.value.assign(out, 0.0);
        bias_.grad.assign(out, 0.0);
        init_uniform(weight_.value, std::sqrt(gain / static_cast<double>(in)), rng);
    }

    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
        if (product(in) != in_)
            throw Error(ErrorKind::ShapeMismatch, "dense layer expects " + std::to_string(in_) + " inputs");
        return {out_};
    }

    Tensor forward(const Tensor& x, bool training) override {
        const std::size_t n = x.samples();
        if (x.sample_size() != in_) {
            throw Error(ErrorKind::ShapeMismatch, "dense layer expects " + std::to_string(in_) + " inputs, got " +
                                                      std::to_string(x.sample_size()));
        }
        Tensor y({n, out_});
        auto yv = y.values();
        for (std::size_t r = 0; r < n; ++r) std::copy(bias_.value.begin(), bias_.value.end(), yv.begin() + r * out_);
        if (n) {
            detail::gemm(detail::Op::N, detail::Op::T, n, out_, in_, 1.0, x.values().data(), in_, weight_.value.data(),
                         in_, 1.0, yv.data(), out_);
        }
        if (training) input_ = x;
        return y;
    }

    Tensor backward(const Tensor& g) override {
        const std::size_t n = g.samples();
        const double* gy = g.values().data();
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t o = 0; o < out_; ++o) bias_.grad[o] += gy[r * out_ + o];
        detail::gemm(detail::Op::T, detail::Op::N, out_, in_, n, 1.0, gy, out_, input_.values().data(), in_, 1.0,
                     weight_.grad.data(), in_);
        Tensor dx(input_.shape());
        detail::gemm(detail::Op::N, detail::Op::N, n, in_, out_, 1.0, gy, out_, weight_.value.data(), in_, 0.0,
                     dx.values().data(), in_);
        return dx;
    }

    std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }

private:
    std::size_t in_, out_;
    Parameter weight_, bias_;
    Tensor input_;
};

class ConvLayer final : public Layer {
public:
    ConvLayer(std::size_t channels, std::size_t filters, std::size_t kernel, std::size_t stride, std::size_t padding,
              Rng& rng)
        : c_(channels), f_(filters), k_(kernel), s_(stride), p_(padding) {
        const std::size_t fan_in = c_ * k_ * k_;
        weight_.value.resize(f_ * fan_in);
        weight_.grad.assign(f_ * fan_in, 0.0);
        bias_.value.assign(f_, 0.0);
        bias_.grad.assign(f_, 0.0);
        init_uniform(weight_.value, std::sqrt(6.0 / static_cast<double>(fan_in)), rng);
    }

    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
        if (in.size() != 3 || in[0] != c_) {
            throw Error(ErrorKind::ShapeMismatch,
                        "conv layer expects " + std::to_string(c_) + "×H×W input, got " + shape_to_string(in));
        }
        if (in[1] + 2 * p_ < k_ || in[2] + 2 * p_ < k_)
            throw Error(ErrorKind::ShapeMismatch, "conv kernel exceeds padded input");
        return {f_, (in[1] + 2 * p_ - k_) / s_ + 1, (in[2] + 2 * p_ - k_) / s_ + 1};
    }

    Tensor forward(const Tensor& x, bool training) override {
        if (x.ndim() != 4) throw Error(ErrorKind::ShapeMismatch, "conv input must be N×C×H×W");
        const auto out_shape = output_shape({x.dim(1), x.dim(2), x.dim(3)});
        const std::size_t n = x.dim(0), h = x.dim(2), w = x.dim(3);
        const std::size_t oh = out_shape[1], ow = out_shape[2], plane = oh * ow;
        const std::size_t rows = c_ * k_ * k_;
        Tensor y(with_batch(n, out_shape));
        const std::size_t chunk = chunk_size(rows, plane);
        std::vector<double> cols, out;
        for (std::size_t s0 = 0; s0 < n; s0 += chunk) {
            const std::size_t sn = std::min(chunk, n - s0);
            im2col(x, s0, sn, h, w, oh, ow, cols);
            out.assign(f_ * sn * plane, 0.0);
            detail::gemm(detail::Op::N, detail::Op::N, f_, sn * plane, rows, 1.0, weight_.value.data(), rows,
                         cols.data(), sn * plane, 0.0, out.data(), sn * plane);
            for (std::size_t s = 0; s < sn; ++s) {
                double* dst = y.sample(s0 + s).data();
                for (std::size_t f = 0; f < f_; ++f) {
                    const double* src = out.data() + f * sn * plane + s * plane;
                    for (std::size_t p = 0; p < plane; ++p) dst[f * plane + p] = src[p] + bias_.value[f];
                }
            }
        }
        if (training) input_ = x;
        return y;
    }

    Tensor backward(const Tensor& g) override {
        const std::size_t n = input_.dim(0), h = input_.dim(2), w = input_.dim(3);
        const std::size_t oh = g.dim(2), ow = g.dim(3), plane = oh * ow;
        const std::size_t rows = c_ * k_ * k_;
        Tensor dx(input_.shape());
        const std::size_t chunk = chunk_size(rows, plane);
        std::vector<double> cols, dy, dcols;
        for (std::size_t s0 = 0; s0 < n; s0 += chunk) {
            const std::size_t sn = std::min(chunk, n - s0);
            const std::size_t width = sn * plane;
            im2col(input_, s0, sn, h, w, oh, ow, cols);
            dy.resize(f_ * width);
            for (std::size_t s = 0; s < sn; ++s) {
                const double* src = g.sample(s0 + s).data();
                for (std::size_t f = 0; f < f_; ++f) {
                    double* d = dy.data() + f * width + s * plane;
                    for (std::size_t p = 0; p < plane; ++p) {
                        d[p] = src[f * plane + p];
                        bias_.grad[f] += src[f * plane + p];
                    }
                }
            }
            detail::gemm(detail::Op::N, detail::Op::T, f_, rows, width, 1.0, dy.data(), width, cols.data(), width, 1.0,
                         weight_.grad.data(), rows);
            dcols.assign(rows * width, 0.0);
            detail::gemm(detail::Op::T, detail::Op::N, rows, width, f_, 1.0, weight_.value.data(), rows, dy.data(),
                         width, 0.0, dcols.data(), width);
            col2im(dcols, dx, s0, sn, h, w, oh, ow);
        }
        return dx;
    }

    std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }

private:
    static std::size_t chunk_size(std::size_t rows, std::size_t plane) {
        constexpr std::size_t kBudget = std::size_t{1} << 21;  // doubles per im2col buffer
        return std::max<std::size_t>(1, kBudget / std::max<std::size_t>(1, rows * plane));
    }

    // cols[(c·k + i)·k + j][s·plane + oy·ow + ox]
    void im2col(const Tensor& x, std::size_t s0, std::size_t sn, std::size_t h, std::size_t w, std::size_t oh,
                std::size_t ow, std::vector<double>& cols) const {
        const std::size_t plane = oh * ow, width = sn * plane;
        cols.assign(c_ * k_ * k_ * width, 0.0);
        for (std::size_t s = 0; s < sn; ++s) {
            const double* src = x.sample(s0 + s).data();
            for (std::size_t c = 0; c < c_; ++c) {
                for (std::size_t i = 0; i < k_; ++i) {
                    for (std::size_t j = 0; j < k_; ++j) {
                        double* dst = cols.data() + ((c * k_ + i) * k_ + j) * width + s * plane;
                        for (std::size_t oy = 0; oy < oh; ++oy) {
                            const long iy = long(oy * s_ + i) - long(p_);
                            if (iy < 0 || iy >= long(h)) continue;
                            const double* row = src + (c * h + std::size_t(iy)) * w;
                            for (std::size_t ox = 0; ox < ow; ++ox) {
                                const long ix = long(ox * s_ + j) - long(p_);
                                if (ix >= 0 && ix < long(w)) dst[oy * ow + ox] = row[ix];
                            }
                        }
                    }
                }
            }
        }
    }

    void col2im(const std::vector<double>& cols, Tensor& dx, std::size_t s0, std::size_t sn, std::size_t h,
                std::size_t w, std::size_t oh, std::size_t ow) const {
        const std::size_t plane = oh * ow, width = sn * plane;
        for (std::size_t s = 0; s < sn; ++s) {
            double* dst = dx.sample(s0 + s).data();
            for (std::size_t c = 0; c < c_; ++c) {
                for (std::size_t i = 0; i < k_; ++i) {
                    for (std::size_t j = 0; j < k_; ++j) {
                        const double* src = cols.data() + ((c * k_ + i) * k_ + j) * width + s * plane;
                        for (std::size_t oy = 0; oy < oh; ++oy) {
                            const long iy = long(oy * s_ + i) - long(p_);
                            if (iy < 0 || iy >= long(h)) continue;
                            double* row = dst + (c * h + std::size_t(iy)) * w;
                            for (std::size_t ox = 0; ox < ow; ++ox) {
                                const long ix = long(ox * s_ + j) - long(p_);
                                if (ix >= 0 && ix < long(w)) row[ix] += src[oy * ow + ox];
                            }
                        }
                    }
                }
            }
        }
    }

    std::size_t c_, f_, k_, s_, p_;
    Parameter weight_, bias_;
    Tensor input_;
};

class MaxPoolLayer final : public Layer {
public:
    MaxPoolLayer(std::size_t kernel, std::size_t stride, std::size_t padding) : k_(kernel), s_(stride), p_(padding) {}

    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override {
        if (in.size() != 3) throw Error(ErrorKind::ShapeMismatch, "max pool expects C×H×W input");
        if (in[1] + 2 * p_ < k_ || in[2] + 2 * p_ < k_)
            throw Error(ErrorKind::ShapeMismatch, "pool window exceeds input");
        return {in[0], (in[1] + 2 * p_ - k_) / s_ + 1, (in[2] + 2 * p_ - k_) / s_ + 1};
    }

    Tensor forward(const Tensor& x, bool training) override {
        const auto out_shape = output_shape({x.dim(1), x.dim(2), x.dim(3)});
        const std::size_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
        const std::size_t oh = out_shape[1], ow = out_shape[2];
        Tensor y(with_batch(n, out_shape));
        if (training) {
            argmax_.assign(y.size(), 0);
            in_shape_ = x.shape();
        }
        auto xv = x.values();
        auto yv = y.values();
        for (std::size_t sc = 0; sc < n * c; ++sc) {
            const std::size_t base = sc * h * w;
            for (std::size_t oy = 0; oy < oh; ++oy) {
                for (std::size_t ox = 0; ox < ow; ++ox) {
                    double best = -std::numeric_limits<double>::infinity();
                    std::size_t best_at = base;
                    for (std::size_t i = 0; i < k_; ++i) {
                        const long iy = long(oy * s_ + i) - long(p_);
                        if (iy < 0 || iy >= long(h)) continue;
                        for (std::size_t j = 0; j < k_; ++j) {
                            const long ix = long(ox * s_ + j) - long(p_);
                            if (ix < 0 || ix >= long(w)) continue;
                            const std::size_t at = base + std::size_t(iy) * w + std::size_t(ix);
                            if (xv[at] > best) {
                                best = xv[at];
                                best_at = at;
                            }
                        }
                    }
                    const std::size_t o = (sc * oh + oy) * ow + ox;
                    yv[o] = best;
                    if (training) argmax_[o] = best_at;
                }
            }
        }
        return y;
    }

    Tensor backward(const Tensor& g) override {
        Tensor dx(in_shape_);
        auto gv = g.values();
        for (std::size_t o = 0; o < gv.size(); ++o) dx[argmax_[o]] += gv[o];
        return dx;
    }

private:
    std::size_t k_, s_, p_;
    std::vector<std::size_t> argmax_;
    std::vector<std::size_t> in_shape_;
};

class ReluLayer final : public Layer {
public:
    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override { return in; }

    Tensor forward(const Tensor& x, bool training) override {
        Tensor y = x;
        for (auto& v : y.values()) v = v > 0.0 ? v : 0.0;
        if (training) output_ = y;
        return y;
    }

    Tensor backward(const Tensor& g) override {
        Tensor dx = g;
        auto out = output_.values();
        auto d = dx.values();
        for (std::size_t i = 0; i < d.size(); ++i)
            if (!(out[i] > 0.0)) d[i] = 0.0;
        return dx;
    }

private:
    Tensor output_;
};

class FlattenLayer final : public Layer {
public:
    std::vector<std::size_t> output_shape(const std::vector<std::size_t>& in) const override { return {product(in)}; }

    Tensor forward(const Tensor& x, bool training) override {
        if (training) in_shape_ = x.shape();
        return Tensor({x.samples(), x.sample_size()}, std::vector<double>(x.values().begin(), x.values().end()));
    }

    Tensor backward(const Tensor& g) override {
        return Tensor(in_shape_, std::vector<double>(g.values().begin(), g.values().end()));
    }

private:
    std::vector<std::size_t> in_shape_;
};

}  // namespace

LossResult softmax_cross_entropy(const Tensor& logits, std::span<const std::size_t> labels) {
    const std::size_t n = logits.samples();
    const std::size_t k = logits.sample_size();
    if (labels.size() != n) throw Error(ErrorKind::ShapeMismatch, "label count does not match batch");
    LossResult r;
    r.grad_logits = Tensor(logits.shape());
    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t s = 0; s < n; ++s) {
        auto z = logits.sample(s);
        auto g = r.grad_logits.sample(s);
        if (labels[s] >= k)
            throw Error(ErrorKind::ShapeMismatch, "label " + std::to_string(labels[s]) + " out of range");
        const double zmax = *std::max_element(z.begin(), z.end());
        double denom = 0.0;
        for (double v : z) denom += std::exp(v - zmax);
        const double log_denom = std::log(denom);
        r.loss -= z[labels[s]] - zmax - log_denom;
        for (std::size_t c = 0; c < k; ++c) {
            g[c] = (std::exp(z[c] - zmax - log_denom) - (c == labels[s] ? 1.0 : 0.0)) * inv_n;
        }
    }
    r.loss *= inv_n;
    return r;
}

Network::Network(const NetworkSpec& spec, std::vector<std::size_t> input_shape, std::size_t classes, std::uint64_t seed)
    : input_shape_(std::move(input_shape)), classes_(classes) {
    if (classes < 2) throw Error(ErrorKind::InvalidConfig, "a classifier needs at least 2 classes");
    Rng rng(seed);
    std::vector<std::size_t> shape = input_shape_;
    std::vector<std::size_t> weight_layers;  // indices of conv/dense layers eligible for capture
    std::vector<std::string> weight_names;
    for (std::size_t i = 0; i < spec.layers.size(); ++i) {
        const auto& def = spec.layers[i];
        std::unique_ptr<Layer> layer;
        switch (def.type) {
            case LayerType::Dense: {
                layer = std::make_unique<DenseLayer>(product(shape), spec.width_scale.apply(def.width), 6.0, rng);
                break;
            }
            case LayerType::Classifier:
                if (i + 1 != spec.layers.size()) {
                    throw Error(ErrorKind::InvalidConfig, "classifier must be the last layer");
                }
                layer = std::make_unique<DenseLayer>(product(shape), classes, 3.0, rng);
                break;
            case LayerType::Conv:
                if (shape.size() != 3)
                    throw Error(ErrorKind::InvalidConfig, "conv layer '" + def.name + "' needs C×H×W input");
                layer = std::make_unique<ConvLayer>(shape[0], spec.width_scale.apply(def.width), def.kernel, def.stride,
                                                    def.padding, rng);
                break;
            case LayerType::MaxPool:
                layer = std::make_unique<MaxPoolLayer>(def.kernel, def.stride, def.padding);
                break;
            case LayerType::Relu:
                layer = std::make_unique<ReluLayer>();
                break;
            case LayerType::Flatten:
                layer = std::make_unique<FlattenLayer>();
                break;
        }
        shape = layer->output_shape(shape);
        layers_.push_back(std::move(layer));
        if (def.type == LayerType::Dense || def.type == LayerType::Conv) {
            const bool relu_next = i + 1 < spec.layers.size() && spec.layers[i + 1].type == LayerType::Relu;
            capture_at_.push_back(relu_next ? i + 1 : i);
            capture_names_.push_back(def.name);
            capture_shapes_.push_back(shape);
        }
    }
    if (spec.layers.empty() || spec.layers.back().type != LayerType::Classifier) {
        throw Error(ErrorKind::InvalidConfig, "network must end with a classifier layer");
    }
}

ForwardResult Network::forward(const Tensor& batch, bool capture, bool training) {
    std::vector<std::size_t> expect{batch.samples()};
    expect.insert(expect.end(), input_shape_.begin(), input_shape_.end());
    if (batch.shape() != expect) {
        throw Error(ErrorKind::ShapeMismatch,
                    "batch shape " + shape_to_string(batch.shape()) + ", network expects " + shape_to_string(expect));
    }
    ForwardResult result;
    Tensor x = batch;
    std::size_t next_capture = 0;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        x = layers_[i]->forward(x, training);
        while (capture && next_capture < capture_at_.size() && capture_at_[next_capture] == i) {
            result.activations.push_back({capture_names_[next_capture], x});
            ++next_capture;
        }
    }
    result.logits = std::move(x);
    return result;
}

double Network::loss_and_gradients(const Tensor& batch, std::span<const std::size_t> labels) {
    zero_gradients();
    auto fwd = forward(batch, false, true);
    auto loss = softmax_cross_entropy(fwd.logits, labels);
    Tensor g = std::move(loss.grad_logits);
    for (std::size_t i = layers_.size(); i-- > 0;) g = layers_[i]->backward(g);
    return loss.loss;
}

double Network::loss(const Tensor& batch, std::span<const std::size_t> labels) {
    return softmax_cross_entropy(forward(batch, false, false).logits, labels).loss;
}

std::vector<Parameter*> Network::parameters() {
    std::vector<Parameter*> out;
    for (auto& l : layers_)
        for (auto* p : l->parameters()) out.push_back(p);
    return out;
}

void Network::zero_gradients() {
    for (auto* p : parameters()) std::fill(p->grad.begin(), p->grad.end(), 0.0);
}

std::size_t Network::parameter_count() {
    std::size_t n = 0;
    for (auto* p : parameters()) n += p->value.size();
    return n;
}

}  // namespace satlab::nn
