#include "satlab/nn/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <fstream>

#include "satlab/error.hpp"

namespace satlab::nn {

DataSplit DataSplit::subset(std::span<const std::size_t> rows) const {
    DataSplit out;
    out.inputs = inputs.gather(rows);
    for (auto r : rows) out.labels.push_back(labels[r]);
    return out;
}

DataSplit DataSplit::head(std::size_t n) const {
    n = std::min(n, size());
    std::vector<std::size_t> rows(n);
    for (std::size_t i = 0; i < n; ++i) rows[i] = i;
    return subset(rows);
}

void Dataset::validate() const {
    if (class_count < 2) throw Error(ErrorKind::InvalidConfig, name + ": needs at least 2 classes");
    for (const auto* split : {&train, &val, &test}) {
        if (split->labels.empty() && split->inputs.size() == 0) continue;
        if (split->inputs.samples() != split->labels.size()) {
            throw Error(ErrorKind::SampleMisalignment, name + ": inputs and labels differ in length");
        }
        std::vector<std::size_t> per(split->inputs.shape().begin() + 1, split->inputs.shape().end());
        if (per != input_shape) {
            throw Error(ErrorKind::ShapeMismatch, name + ": sample shape " + shape_to_string(per) + " != " +
                                                      shape_to_string(input_shape));
        }
        for (auto y : split->labels) {
            if (y >= class_count) throw Error(ErrorKind::InvalidConfig, name + ": label out of range");
        }
    }
    if (train.size() == 0) throw Error(ErrorKind::EmptySplit, name + ": empty training split");
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::vector<std::uint8_t> bytes;
    if (path.extension() == ".gz") {
        gzFile f = gzopen(path.string().c_str(), "rb");
        if (!f) throw Error(ErrorKind::IoFailure, "cannot open " + path.string());
        std::uint8_t buf[1 << 16];
        int got;
        while ((got = gzread(f, buf, sizeof buf)) > 0) bytes.insert(bytes.end(), buf, buf + got);
        const bool failed = got < 0;
        gzclose(f);
        if (failed) throw Error(ErrorKind::TruncatedFile, "corrupt gzip stream in " + path.string());
        return bytes;
    }
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoFailure, "cannot open " + path.string());
    bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    return bytes;
}

namespace {

std::uint32_t be32(std::span<const std::uint8_t> b, std::size_t at) {
    return (std::uint32_t(b[at]) << 24) | (std::uint32_t(b[at + 1]) << 16) | (std::uint32_t(b[at + 2]) << 8) |
           std::uint32_t(b[at + 3]);
}

std::filesystem::path find_file(const std::filesystem::path& dir, const std::string& stem) {
    for (const auto& candidate : {dir / stem, dir / (stem + ".gz")}) {
        if (std::filesystem::exists(candidate)) return candidate;
    }
    throw Error(ErrorKind::IoFailure, "missing " + (dir / stem).string() + "[.gz]");
}

}  // namespace

Tensor parse_idx_images(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 16) throw Error(ErrorKind::TruncatedFile, "IDX image header needs 16 bytes");
    if (be32(bytes, 0) != 0x00000803) throw Error(ErrorKind::BadMagic, "not an IDX image file");
    const std::size_t n = be32(bytes, 4), rows = be32(bytes, 8), cols = be32(bytes, 12);
    const std::size_t need = 16 + n * rows * cols;
    if (bytes.size() < need) {
        throw Error(ErrorKind::TruncatedFile, "IDX images need " + std::to_string(need) + " bytes, have " +
                                                  std::to_string(bytes.size()));
    }
    Tensor t({n, 1, rows, cols});
    auto v = t.values();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = bytes[16 + i] / 255.0;
    return t;
}

std::vector<std::size_t> parse_idx_labels(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8) throw Error(ErrorKind::TruncatedFile, "IDX label header needs 8 bytes");
    if (be32(bytes, 0) != 0x00000801) throw Error(ErrorKind::BadMagic, "not an IDX label file");
    const std::size_t n = be32(bytes, 4);
    if (bytes.size() < 8 + n) throw Error(ErrorKind::TruncatedFile, "IDX labels truncated");
    return std::vector<std::size_t>(bytes.begin() + 8, bytes.begin() + 8 + static_cast<std::ptrdiff_t>(n));
}

DataSplit parse_cifar_batch(std::span<const std::uint8_t> bytes) {
    constexpr std::size_t kRecord = 3073;
    if (bytes.size() % kRecord != 0) {
        throw Error(ErrorKind::TruncatedFile, "CIFAR batch of " + std::to_string(bytes.size()) +
                                                  " bytes is not a whole number of 3073-byte records");
    }
    const std::size_t n = bytes.size() / kRecord;
    DataSplit split;
    split.inputs = Tensor({n, 3, 32, 32});
    auto v = split.inputs.values();
    for (std::size_t i = 0; i < n; ++i) {
        const std::uint8_t* rec = bytes.data() + i * kRecord;
        if (rec[0] > 9) throw Error(ErrorKind::ParseError, "CIFAR label " + std::to_string(rec[0]) + " out of range");
        split.labels.push_back(rec[0]);
        for (std::size_t j = 0; j < 3072; ++j) v[i * 3072 + j] = rec[1 + j] / 255.0;
    }
    return split;
}

Dataset load_mnist(const std::filesystem::path& dir, std::size_t max_train, std::size_t max_val) {
    Dataset d;
    d.name = "mnist";
    d.class_count = 10;
    d.train.inputs = parse_idx_images(read_file_bytes(find_file(dir, "train-images-idx3-ubyte")));
    d.train.labels = parse_idx_labels(read_file_bytes(find_file(dir, "train-labels-idx1-ubyte")));
    d.val.inputs = parse_idx_images(read_file_bytes(find_file(dir, "t10k-images-idx3-ubyte")));
    d.val.labels = parse_idx_labels(read_file_bytes(find_file(dir, "t10k-labels-idx1-ubyte")));
    d.input_shape = {1, d.train.inputs.dim(2), d.train.inputs.dim(3)};
    if (max_train) d.train = d.train.head(max_train);
    if (max_val) d.val = d.val.head(max_val);
    d.validate();
    return d;
}

Dataset load_cifar10(const std::filesystem::path& dir, std::size_t max_train, std::size_t max_val) {
    Dataset d;
    d.name = "cifar10";
    d.class_count = 10;
    d.input_shape = {3, 32, 32};
    std::vector<DataSplit> parts;
    std::size_t total = 0;
    for (int b = 1; b <= 5; ++b) {
        const auto path = dir / ("data_batch_" + std::to_string(b) + ".bin");
        if (!std::filesystem::exists(path)) continue;
        parts.push_back(parse_cifar_batch(read_file_bytes(path)));
        total += parts.back().size();
        if (max_train && total >= max_train) break;
    }
    if (parts.empty()) throw Error(ErrorKind::IoFailure, "no data_batch_*.bin in " + dir.string());
    d.train.inputs = Tensor({total, 3, 32, 32});
    std::size_t at = 0;
    for (const auto& p : parts) {
        std::copy(p.inputs.values().begin(), p.inputs.values().end(), d.train.inputs.values().begin() + at * 3072);
        d.train.labels.insert(d.train.labels.end(), p.labels.begin(), p.labels.end());
        at += p.size();
    }
    d.val = parse_cifar_batch(read_file_bytes(dir / "test_batch.bin"));
    if (max_train) d.train = d.train.head(max_train);
    if (max_val) d.val = d.val.head(max_val);
    d.validate();
    return d;
}

Dataset pad_to(const Dataset& data, std::size_t size) {
    if (data.input_shape.size() != 3) throw Error(ErrorKind::BadLayout, "padding needs image-shaped inputs");
    const std::size_t c = data.input_shape[0], h = data.input_shape[1], w = data.input_shape[2];
    if (size < h || size < w) throw Error(ErrorKind::InvalidConfig, "pad target smaller than input");
    const std::size_t top = (size - h) / 2, left = (size - w) / 2;
    Dataset out = data;
    out.input_shape = {c, size, size};
    for (auto* split : {&out.train, &out.val, &out.test}) {
        const std::size_t n = split->size();
        if (n == 0) continue;
        Tensor padded({n, c, size, size});
        for (std::size_t s = 0; s < n; ++s) {
            auto src = split->inputs.sample(s);
            auto dst = padded.sample(s);
            for (std::size_t ch = 0; ch < c; ++ch)
                for (std::size_t y = 0; y < h; ++y)
                    for (std::size_t x = 0; x < w; ++x)
                        dst[(ch * size + y + top) * size + x + left] = src[(ch * h + y) * w + x];
        }
        split->inputs = std::move(padded);
    }
    return out;
}

namespace {

// Unit-norm smooth pattern: a few low-frequency separable cosines per channel.
std::vector<double> smooth_pattern(const std::vector<std::size_t>& shape, Rng& rng) {
    const std::size_t total = shape_product(shape);
    std::vector<double> p(total, 0.0);
    if (shape.size() != 3) {
        for (auto& v : p) v = rng.normal();
    } else {
        const std::size_t c = shape[0], h = shape[1], w = shape[2];
        for (std::size_t ch = 0; ch < c; ++ch) {
            for (int term = 0; term < 3; ++term) {
                const double fy = static_cast<double>(rng.index(4)), fx = static_cast<double>(rng.index(4));
                const double amp = rng.normal(), py = rng.uniform(0.0, 2 * M_PI), px = rng.uniform(0.0, 2 * M_PI);
                for (std::size_t y = 0; y < h; ++y)
                    for (std::size_t x = 0; x < w; ++x)
                        p[(ch * h + y) * w + x] += amp * std::cos(M_PI * fy * (y + 0.5) / h + py) *
                                                   std::cos(M_PI * fx * (x + 0.5) / w + px);
            }
        }
    }
    double norm = 0.0;
    for (double v : p) norm += v * v;
    norm = std::sqrt(norm);
    for (auto& v : p) v /= norm;
    return p;
}

DataSplit sample_blobs(const BlobSpec& spec, std::size_t n, const std::vector<std::vector<double>>& centers,
                       const std::vector<std::vector<double>>& basis, Rng& rng) {
    const std::size_t total = shape_product(spec.shape);
    const std::size_t r = spec.latent_dim ? spec.latent_dim : total;
    DataSplit split;
    std::vector<std::size_t> shape{n};
    shape.insert(shape.end(), spec.shape.begin(), spec.shape.end());
    split.inputs = Tensor(shape);
    std::vector<double> z(r);
    for (std::size_t s = 0; s < n; ++s) {
        const std::size_t y = s % spec.classes;
        split.labels.push_back(y);
        for (std::size_t i = 0; i < r; ++i) z[i] = centers[y][i] + spec.spread * rng.normal();
        auto x = split.inputs.sample(s);
        if (spec.latent_dim == 0) {
            std::copy(z.begin(), z.end(), x.begin());
        } else {
            for (std::size_t i = 0; i < r; ++i)
                for (std::size_t j = 0; j < total; ++j) x[j] += z[i] * basis[i][j];
        }
        if (spec.noise > 0.0)
            for (auto& v : x) v += spec.noise * rng.normal();
    }
    return split;
}

}  // namespace

Dataset make_blobs(const BlobSpec& spec) {
    if (spec.classes < 2) throw Error(ErrorKind::InvalidConfig, "blobs need at least 2 classes");
    const std::size_t total = shape_product(spec.shape);
    if (total == 0) throw Error(ErrorKind::InvalidConfig, "blob sample shape is empty");
    Rng rng(spec.seed);
    const std::size_t r = spec.latent_dim ? spec.latent_dim : total;
    std::vector<std::vector<double>> centers(spec.classes, std::vector<double>(r));
    for (auto& c : centers)
        for (auto& v : c) v = spec.separation * rng.normal() / std::sqrt(2.0);
    std::vector<std::vector<double>> basis;
    if (spec.latent_dim) {
        for (std::size_t i = 0; i < r; ++i) basis.push_back(smooth_pattern(spec.shape, rng));
    }
    Dataset d;
    d.name = "blobs" + std::to_string(spec.classes);
    d.input_shape = spec.shape;
    d.class_count = spec.classes;
    d.train = sample_blobs(spec, spec.train, centers, basis, rng);
    d.val = sample_blobs(spec, spec.val, centers, basis, rng);
    d.validate();
    return d;
}

namespace {

DataSplit sample_textures(const TextureSpec& spec, std::size_t n, Rng& rng) {
    const std::size_t S = spec.size;
    DataSplit split;
    split.inputs = Tensor({n, 3, S, S});
    for (std::size_t s = 0; s < n; ++s) {
        const std::size_t y = s % spec.classes;
        split.labels.push_back(y);
        // Class identity: grating orientation, frequency band and hue.
        const double theta = M_PI * static_cast<double>(y) / static_cast<double>(spec.classes) + 0.12 * rng.normal();
        const double freq = (2.0 + static_cast<double>(y % 3) * 1.5) * (1.0 + 0.12 * rng.normal());
        const double phase = rng.uniform(0.0, 2 * M_PI);
        const double contrast = rng.uniform(0.5, 1.5);
        const double hue = 2 * M_PI * static_cast<double>(y % 5) / 5.0 + 0.3 * rng.normal();
        // Clutter: a second grating of random orientation and colour.
        const double theta2 = rng.uniform(0.0, M_PI), freq2 = rng.uniform(1.0, 6.0), phase2 = rng.uniform(0.0, 2 * M_PI);
        const double amp2 = rng.uniform(0.0, 0.6);
        const double hue2 = rng.uniform(0.0, 2 * M_PI);
        const double bright = rng.uniform(-0.15, 0.15);
        auto x = split.inputs.sample(s);
        for (std::size_t ch = 0; ch < 3; ++ch) {
            const double col = std::cos(hue + 2.0 * M_PI * static_cast<double>(ch) / 3.0);
            const double col2 = std::cos(hue2 + 2.0 * M_PI * static_cast<double>(ch) / 3.0);
            for (std::size_t py = 0; py < S; ++py) {
                for (std::size_t px = 0; px < S; ++px) {
                    const double u = (static_cast<double>(px) * std::cos(theta) + static_cast<double>(py) * std::sin(theta)) / S;
                    const double u2 =
                        (static_cast<double>(px) * std::cos(theta2) + static_cast<double>(py) * std::sin(theta2)) / S;
                    const double v = 0.5 + bright + 0.2 * contrast * col * std::cos(2 * M_PI * freq * u + phase) +
                                     0.2 * amp2 * col2 * std::cos(2 * M_PI * freq2 * u2 + phase2) +
                                     spec.noise * 0.25 * rng.normal();
                    x[(ch * S + py) * S + px] = v;
                }
            }
        }
    }
    return split;
}

}  // namespace

Dataset make_textures(const TextureSpec& spec) {
    if (spec.classes < 2) throw Error(ErrorKind::InvalidConfig, "textures need at least 2 classes");
    Rng rng(spec.seed);
    Dataset d;
    d.name = "textures";
    d.input_shape = {3, spec.size, spec.size};
    d.class_count = spec.classes;
    d.train = sample_textures(spec, spec.train, rng);
    d.val = sample_textures(spec, spec.val, rng);
    d.validate();
    return d;
}

ChannelNormalizer ChannelNormalizer::fit(const Tensor& train) {
    if (train.ndim() != 2 && train.ndim() != 4) throw Error(ErrorKind::BadLayout, "normalizer needs 2-D or 4-D input");
    const std::size_t n = train.samples();
    const std::size_t channels = train.dim(1);
    const std::size_t plane = train.ndim() == 4 ? train.dim(2) * train.dim(3) : 1;
    ChannelNormalizer norm;
    norm.mean.assign(channels, 0.0);
    norm.stddev.assign(channels, 1.0);
    const double count = static_cast<double>(n * plane);
    auto v = train.values();
    for (std::size_t c = 0; c < channels; ++c) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t p = 0; p < plane; ++p) s += v[(i * channels + c) * plane + p];
        const double mean = s / count;
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t p = 0; p < plane; ++p) {
                const double d = v[(i * channels + c) * plane + p] - mean;
                ss += d * d;
            }
        norm.mean[c] = mean;
        const double sd = std::sqrt(ss / count);
        norm.stddev[c] = sd > 1e-12 ? sd : 1.0;
    }
    return norm;
}

void ChannelNormalizer::apply(Tensor& inputs) const {
    if (inputs.size() == 0) return;
    const std::size_t n = inputs.samples();
    const std::size_t channels = inputs.dim(1);
    if (channels != mean.size()) throw Error(ErrorKind::DimMismatch, "normalizer channel count mismatch");
    const std::size_t plane = inputs.ndim() == 4 ? inputs.dim(2) * inputs.dim(3) : 1;
    auto v = inputs.values();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < channels; ++c)
            for (std::size_t p = 0; p < plane; ++p) {
                double& x = v[(i * channels + c) * plane + p];
                x = (x - mean[c]) / stddev[c];
            }
}

Dataset normalized(const Dataset& data) {
    Dataset out = data;
    const auto norm = ChannelNormalizer::fit(data.train.inputs);
    norm.apply(out.train.inputs);
    norm.apply(out.val.inputs);
    norm.apply(out.test.inputs);
    return out;
}

void random_crop_flip(Tensor& batch, std::size_t pad, Rng& rng) {
    if (batch.ndim() != 4) throw Error(ErrorKind::BadLayout, "crop/flip needs N×C×H×W batches");
    const std::size_t n = batch.dim(0), c = batch.dim(1), h = batch.dim(2), w = batch.dim(3);
    std::vector<double> tmp(c * h * w);
    for (std::size_t s = 0; s < n; ++s) {
        auto x = batch.sample(s);
        const long dy = static_cast<long>(rng.index(2 * pad + 1)) - static_cast<long>(pad);
        const long dx = static_cast<long>(rng.index(2 * pad + 1)) - static_cast<long>(pad);
        const bool flip = rng.bernoulli(0.5);
        for (std::size_t ch = 0; ch < c; ++ch) {
            for (std::size_t y = 0; y < h; ++y) {
                for (std::size_t xo = 0; xo < w; ++xo) {
                    const long sy = static_cast<long>(y) + dy;
                    const long sx0 = static_cast<long>(flip ? w - 1 - xo : xo) + dx;
                    double v = 0.0;
                    if (sy >= 0 && sy < long(h) && sx0 >= 0 && sx0 < long(w)) v = x[(ch * h + std::size_t(sy)) * w + std::size_t(sx0)];
                    tmp[(ch * h + y) * w + xo] = v;
                }
            }
        }
        std::copy(tmp.begin(), tmp.end(), x.begin());
    }
}

}  // namespace satlab::nn
