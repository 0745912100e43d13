#include "satlab/io/dump.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <json.hpp>

#include "satlab/error.hpp"

namespace satlab::io {

namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

std::uint16_t get_u16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void validate(const ActivationDumpHeader& h) {
    if (h.layer_name.size() > kMaxNameLength) {
        throw Error(ErrorKind::OversizedName,
                    "layer name of " + std::to_string(h.layer_name.size()) + " bytes exceeds 256");
    }
    if (h.dims.size() != 2 && h.dims.size() != 4) {
        throw Error(ErrorKind::BadLayout, "dump ndim must be 2 or 4, got " + std::to_string(h.dims.size()));
    }
    if (h.dtype != kDtypeFloat32) {
        throw Error(ErrorKind::UnsupportedDtype, "dtype " + std::to_string(h.dtype));
    }
}

void read_exact(std::ifstream& in, void* dst, std::size_t n, ErrorKind kind, const std::string& what) {
    in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) throw Error(kind, "file ends inside " + what);
}

ActivationDumpHeader read_header(std::ifstream& in) {
    std::uint8_t fixed[8];
    read_exact(in, fixed, 4, ErrorKind::BadMagic, "magic");
    if (std::memcmp(fixed, kDumpMagic, 4) != 0) throw Error(ErrorKind::BadMagic, "not a SATD dump");
    read_exact(in, fixed + 4, 4, ErrorKind::TruncatedPayload, "header");
    const std::uint16_t version = get_u16(fixed + 4);
    if (version != kDumpVersion) {
        throw Error(ErrorKind::UnsupportedVersion, "SATD version " + std::to_string(version));
    }
    const std::uint16_t name_len = get_u16(fixed + 6);
    if (name_len > kMaxNameLength) {
        throw Error(ErrorKind::OversizedName, "header declares a " + std::to_string(name_len) + "-byte name");
    }
    ActivationDumpHeader h;
    h.layer_name.resize(name_len);
    read_exact(in, h.layer_name.data(), name_len, ErrorKind::TruncatedPayload, "layer name");
    std::uint8_t ndim = 0;
    read_exact(in, &ndim, 1, ErrorKind::TruncatedPayload, "header");
    if (ndim != 2 && ndim != 4) throw Error(ErrorKind::BadLayout, "dump ndim " + std::to_string(ndim));
    std::uint8_t dims[16];
    read_exact(in, dims, 4u * ndim, ErrorKind::TruncatedPayload, "dims");
    for (std::size_t i = 0; i < ndim; ++i) h.dims.push_back(get_u32(dims + 4 * i));
    read_exact(in, &h.dtype, 1, ErrorKind::TruncatedPayload, "header");
    if (h.dtype != kDtypeFloat32) throw Error(ErrorKind::UnsupportedDtype, "dtype " + std::to_string(h.dtype));
    return h;
}

void encode_header(std::vector<std::uint8_t>& out, const ActivationDumpHeader& header) {
    out.insert(out.end(), kDumpMagic, kDumpMagic + 4);
    put_u16(out, kDumpVersion);
    put_u16(out, static_cast<std::uint16_t>(header.layer_name.size()));
    out.insert(out.end(), header.layer_name.begin(), header.layer_name.end());
    out.push_back(static_cast<std::uint8_t>(header.dims.size()));
    for (auto d : header.dims) put_u32(out, d);
    out.push_back(header.dtype);
}

void decode_floats(const std::uint8_t* bytes, std::size_t count, float* out) {
    if constexpr (std::endian::native == std::endian::little) {
        std::memcpy(out, bytes, count * 4);
    } else {
        for (std::size_t i = 0; i < count; ++i) out[i] = std::bit_cast<float>(get_u32(bytes + 4 * i));
    }
}

}  // namespace

std::size_t ActivationDumpHeader::element_count() const {
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
}

std::size_t ActivationDumpHeader::sample_elements() const {
    std::size_t n = 1;
    for (std::size_t i = 1; i < dims.size(); ++i) n *= dims[i];
    return n;
}

std::size_t ActivationDumpHeader::header_bytes() const { return 4 + 2 + 2 + layer_name.size() + 1 + 4 * dims.size() + 1; }

Tensor ActivationDump::to_tensor() const {
    std::vector<std::size_t> shape(header.dims.begin(), header.dims.end());
    return Tensor(std::move(shape), std::vector<double>(values.begin(), values.end()));
}

std::vector<std::uint8_t> encode_dump(const ActivationDumpHeader& header, std::span<const float> values) {
    validate(header);
    if (values.size() != header.element_count()) {
        throw Error(ErrorKind::ShapeMismatch, "payload has " + std::to_string(values.size()) + " values, dims need " +
                                                  std::to_string(header.element_count()));
    }
    std::vector<std::uint8_t> out;
    out.reserve(header.header_bytes() + 4 * values.size());
    encode_header(out, header);
    for (float v : values) put_u32(out, std::bit_cast<std::uint32_t>(v));
    return out;
}

DumpWriter::DumpWriter(const std::filesystem::path& path, ActivationDumpHeader header)
    : path_(path), header_(std::move(header)) {
    validate(header_);
    std::vector<std::uint8_t> bytes;
    encode_header(bytes, header_);
    out_.open(path_, std::ios::binary | std::ios::trunc);
    if (!out_) throw Error(ErrorKind::IoFailure, "cannot open " + path_.string() + " for writing");
    out_.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    remaining_ = header_.dims.empty() ? 0 : header_.dims[0];
}

void DumpWriter::append(const Tensor& chunk) {
    if (chunk.ndim() != header_.dims.size() || chunk.sample_size() != header_.sample_elements()) {
        throw Error(ErrorKind::ShapeMismatch, "chunk " + shape_to_string(chunk.shape()) + " does not fit dump of '" +
                                                  header_.layer_name + "'");
    }
    if (chunk.samples() > remaining_) {
        throw Error(ErrorKind::ShapeMismatch, "more samples than the header declares for '" + header_.layer_name + "'");
    }
    std::vector<std::uint8_t> bytes;
    bytes.reserve(4 * chunk.size());
    for (double v : chunk.values()) put_u32(bytes, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    out_.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    remaining_ -= chunk.samples();
}

void DumpWriter::close() {
    if (!out_.is_open()) return;
    if (remaining_ != 0) {
        throw Error(ErrorKind::ShapeMismatch,
                    "dump of '" + header_.layer_name + "' is missing " + std::to_string(remaining_) + " samples");
    }
    out_.close();
    if (!out_) throw Error(ErrorKind::IoFailure, "write to " + path_.string() + " failed");
}

void write_dump(const std::filesystem::path& path, const ActivationDumpHeader& header, std::span<const float> values) {
    const auto bytes = encode_dump(header, values);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoFailure, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::IoFailure, "write to " + path.string() + " failed");
}

void write_dump(const std::filesystem::path& path, const std::string& layer, const Tensor& tensor) {
    ActivationDumpHeader header;
    header.layer_name = layer;
    for (auto d : tensor.shape()) header.dims.push_back(static_cast<std::uint32_t>(d));
    std::vector<float> values(tensor.values().begin(), tensor.values().end());
    write_dump(path, header, values);
}

ActivationDump read_dump(const std::filesystem::path& path) {
    DumpReader reader(path);
    ActivationDump dump;
    dump.header = reader.header();
    const std::size_t count = dump.header.element_count();
    dump.values.resize(count);
    std::ifstream in(path, std::ios::binary);
    // Reuse the reader's validated header length; read the payload once.
    in.seekg(static_cast<std::streamoff>(dump.header.header_bytes()));
    std::vector<std::uint8_t> bytes(4 * count);
    read_exact(in, bytes.data(), bytes.size(), ErrorKind::TruncatedPayload, "payload");
    decode_floats(bytes.data(), count, dump.values.data());
    return dump;
}

DumpReader::DumpReader(const std::filesystem::path& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw Error(ErrorKind::IoFailure, "cannot open " + path.string());
    header_ = read_header(in_);
    in_.seekg(0, std::ios::end);
    const auto end = static_cast<std::size_t>(in_.tellg());
    const std::size_t expected = header_.header_bytes() + 4 * header_.element_count();
    if (end < expected) {
        throw Error(ErrorKind::TruncatedPayload, path.string() + " holds " + std::to_string(end) + " bytes, header needs " +
                                                     std::to_string(expected));
    }
    in_.seekg(static_cast<std::streamoff>(header_.header_bytes()));
    remaining_ = header_.dims.empty() ? 0 : header_.dims[0];
}

Tensor DumpReader::next(std::size_t max_samples) {
    const std::size_t take = std::min(max_samples, remaining_);
    std::vector<std::size_t> shape(header_.dims.begin(), header_.dims.end());
    shape[0] = take;
    const std::size_t count = take * header_.sample_elements();
    std::vector<std::uint8_t> bytes(4 * count);
    read_exact(in_, bytes.data(), bytes.size(), ErrorKind::TruncatedPayload, "payload of " + path_.string());
    std::vector<float> f(count);
    decode_floats(bytes.data(), count, f.data());
    remaining_ -= take;
    return Tensor(std::move(shape), std::vector<double>(f.begin(), f.end()));
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
    nlohmann::ordered_json j;
    j["format"] = "SATD";
    j["version"] = kDumpVersion;
    j["activation"] = manifest.activation;
    j["conv_layout"] = manifest.conv_layout;
    if (!manifest.source.empty()) j["source"] = manifest.source;
    j["layers"] = nlohmann::ordered_json::array();
    for (const auto& e : manifest.layers) j["layers"].push_back({{"name", e.layer}, {"file", e.file}});
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
    out << j.dump(2) << "\n";
}

Manifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoFailure, "cannot open manifest " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, "manifest " + path.string() + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("layers") || !j["layers"].is_array()) {
        throw Error(ErrorKind::MissingField, "manifest " + path.string() + " has no 'layers' array");
    }
    if (j.value("format", std::string("SATD")) != "SATD") throw Error(ErrorKind::BadMagic, "manifest format is not SATD");
    if (j.value("version", 1) != kDumpVersion) {
        throw Error(ErrorKind::UnsupportedVersion, "manifest version " + j["version"].dump());
    }
    Manifest m;
    m.activation = j.value("activation", std::string("post"));
    m.conv_layout = j.value("conv_layout", std::string(m.conv_layout));
    m.source = j.value("source", std::string());
    for (const auto& e : j["layers"]) {
        if (!e.contains("name") || !e.contains("file")) {
            throw Error(ErrorKind::MissingField, "manifest layer entries need 'name' and 'file'");
        }
        m.layers.push_back({e["name"].get<std::string>(), e["file"].get<std::string>()});
    }
    return m;
}

}  // namespace satlab::io
