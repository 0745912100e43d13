#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "satlab/random.hpp"
#include "satlab/tensor.hpp"

namespace satlab::nn {

struct DataSplit {
    Tensor inputs;
    std::vector<std::size_t> labels;

    std::size_t size() const noexcept { return labels.size(); }
    DataSplit subset(std::span<const std::size_t> rows) const;
    DataSplit head(std::size_t n) const;
};

struct Dataset {
    std::string name;
    /// Per-sample shape: {d} or {C, H, W}.
    std::vector<std::size_t> input_shape;
    std::size_t class_count = 0;
    DataSplit train;
    DataSplit val;
    DataSplit test;

    /// Aligned lengths, labels below class_count, shapes consistent.
    void validate() const;
};

// ---- file formats --------------------------------------------------------

/// Whole file, transparently gunzipped when the name ends in ".gz".
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

/// IDX image file (magic 0x00000803): N×1×rows×cols scaled to [0,1].
Tensor parse_idx_images(std::span<const std::uint8_t> bytes);
/// IDX label file (magic 0x00000801).
std::vector<std::size_t> parse_idx_labels(std::span<const std::uint8_t> bytes);

/// CIFAR-10 binary batch: 3073-byte records (label, 3072 CHW pixels).
DataSplit parse_cifar_batch(std::span<const std::uint8_t> bytes);

/// MNIST directory with train-* and t10k-* IDX files (plain or .gz). The
/// t10k files become the validation split. 0 means "all".
Dataset load_mnist(const std::filesystem::path& dir, std::size_t max_train = 0, std::size_t max_val = 0);

/// CIFAR-10 binary directory (data_batch_1..5.bin, test_batch.bin).
Dataset load_cifar10(const std::filesystem::path& dir, std::size_t max_train = 0, std::size_t max_val = 0);

/// Zero-pads H×W inputs to size×size (centered), e.g. MNIST 28 → 32.
Dataset pad_to(const Dataset& data, std::size_t size);

// ---- synthetic -------------------------------------------------------------

/// Gaussian class blobs. With latent_dim == 0 the blobs live directly in
/// the sample space (isotropic, unit spread). Otherwise they live in a
/// latent_dim-dimensional space that is mapped into the sample shape
/// through fixed smooth basis patterns, giving low-rank embedded data.
struct BlobSpec {
    std::size_t classes = 10;
    std::vector<std::size_t> shape{64};
    std::size_t latent_dim = 0;
    double separation = 4.0;
    double spread = 1.0;
    /// Isotropic noise added after embedding.
    double noise = 0.0;
    std::size_t train = 4000;
    std::size_t val = 1000;
    std::uint64_t seed = 1;
};

Dataset make_blobs(const BlobSpec& spec);

/// Oriented colour gratings with random phase, frequency jitter, contrast and
/// pixel noise: a natural-image-like stand-in when CIFAR-10 is unavailable.
struct TextureSpec {
    std::size_t classes = 10;
    std::size_t size = 32;
    double noise = 0.35;
    std::size_t train = 4000;
    std::size_t val = 1000;
    std::uint64_t seed = 1;
};

Dataset make_textures(const TextureSpec& spec);

// ---- preprocessing ---------------------------------------------------------

/// Channel-wise standardization fitted on the training split. For 2-D data
/// every feature is its own channel.
struct ChannelNormalizer {
    std::vector<double> mean;
    std::vector<double> stddev;

    static ChannelNormalizer fit(const Tensor& train);
    void apply(Tensor& inputs) const;
};

/// Normalizes all splits with training statistics.
Dataset normalized(const Dataset& data);

/// Zero-pad by `pad` and crop back to H×W at a random offset, then flip
/// horizontally with probability 0.5. In place, per sample.
void random_crop_flip(Tensor& batch, std::size_t pad, Rng& rng);

}  // namespace satlab::nn
