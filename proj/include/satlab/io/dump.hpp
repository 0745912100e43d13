#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include "satlab/tensor.hpp"

namespace satlab::io {

// SATD v1, all integers little-endian:
//   "SATD" | u16 version | u16 name_len | name bytes | u8 ndim (2 or 4)
//   | ndim × u32 dims | u8 dtype (0 = f32) | row-major f32 payload
inline constexpr char kDumpMagic[4] = {'S', 'A', 'T', 'D'};
inline constexpr std::uint16_t kDumpVersion = 1;
inline constexpr std::size_t kMaxNameLength = 256;
inline constexpr std::uint8_t kDtypeFloat32 = 0;

struct ActivationDumpHeader {
    std::string layer_name;
    std::vector<std::uint32_t> dims;
    std::uint8_t dtype = kDtypeFloat32;

    std::size_t element_count() const;
    /// Bytes preceding the payload.
    std::size_t header_bytes() const;
    /// Elements in one sample (product of all dims but the first).
    std::size_t sample_elements() const;
};

struct ActivationDump {
    ActivationDumpHeader header;
    std::vector<float> values;

    /// Values widened to 64-bit with the header's shape.
    Tensor to_tensor() const;
};

std::vector<std::uint8_t> encode_dump(const ActivationDumpHeader& header, std::span<const float> values);
void write_dump(const std::filesystem::path& path, const ActivationDumpHeader& header, std::span<const float> values);
/// Narrows a 64-bit tensor to the f32 payload.
void write_dump(const std::filesystem::path& path, const std::string& layer, const Tensor& tensor);

ActivationDump read_dump(const std::filesystem::path& path);

/// Streaming writer: the header (with the final sample count) goes out on
/// open, samples follow chunk by chunk. `close` checks the count.
class DumpWriter {
public:
    DumpWriter(const std::filesystem::path& path, ActivationDumpHeader header);
    const ActivationDumpHeader& header() const noexcept { return header_; }
    /// Appends whole samples; values are narrowed to f32.
    void append(const Tensor& chunk);
    void close();

private:
    std::filesystem::path path_;
    std::ofstream out_;
    ActivationDumpHeader header_;
    std::size_t remaining_ = 0;
};

/// Streaming reader: parses the header on open, then hands out the payload
/// in whole-sample chunks. Every payload byte is read exactly once.
class DumpReader {
public:
    explicit DumpReader(const std::filesystem::path& path);

    const ActivationDumpHeader& header() const noexcept { return header_; }
    std::size_t samples_remaining() const noexcept { return remaining_; }

    /// Next chunk of up to `max_samples` samples as a 64-bit tensor with the
    /// header's trailing dims; empty tensor (0 samples) once exhausted.
    Tensor next(std::size_t max_samples);

private:
    std::filesystem::path path_;
    std::ifstream in_;
    ActivationDumpHeader header_;
    std::size_t remaining_ = 0;
};

struct ManifestEntry {
    std::string layer;
    std::string file;
};

/// Ordered list of dumps from one capture session.
struct Manifest {
    std::vector<ManifestEntry> layers;
    /// "post" or "pre" (activation function applied or not).
    std::string activation = "post";
    std::string conv_layout = "spatial-positions-as-samples";
    std::string source;
};

void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
Manifest read_manifest(const std::filesystem::path& path);

}  // namespace satlab::io
