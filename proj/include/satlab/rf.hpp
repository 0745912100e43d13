#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace satlab::rf {

enum class LayerKind { Conv, Pool, Dense, Flatten, Activation, Norm };

std::string_view to_string(LayerKind kind);
std::optional<LayerKind> parse_kind(std::string_view text);
inline bool is_spatial(LayerKind k) { return k == LayerKind::Conv || k == LayerKind::Pool; }

struct LayerGeometry {
    std::string name;
    LayerKind kind = LayerKind::Conv;
    std::size_t kernel = 1;
    std::size_t stride = 1;
    std::size_t padding = 0;
};

using ArchitectureSpec = std::vector<LayerGeometry>;

struct ReceptiveFieldInfo {
    std::string layer;
    LayerKind kind = LayerKind::Conv;
    std::size_t rf = 1;
    std::size_t jump = 1;
    /// Dense layers (and anything after them) see the whole input.
    bool global = false;
    bool is_border = false;
};

/// Standard recursion r_l = r_{l-1} + (k-1)·j_{l-1}, j_l = j_{l-1}·s with
/// r_0 = j_0 = 1. Padding does not enter. Throws IllFormedArchitecture.
std::vector<ReceptiveFieldInfo> receptive_fields(std::span<const LayerGeometry> arch);

/// First layer whose (finite) receptive field is strictly greater than the
/// input resolution.
std::optional<std::size_t> border_layer(std::span<const ReceptiveFieldInfo> rfs, std::size_t input_resolution);

/// receptive_fields with `is_border` set for the given resolution.
std::vector<ReceptiveFieldInfo> receptive_field_table(std::span<const LayerGeometry> arch,
                                                      std::size_t input_resolution);

/// Spatial layers at or after the border layer; empty without a border.
std::vector<std::string> predict_unproductive(std::span<const LayerGeometry> arch, std::size_t input_resolution);

}  // namespace satlab::rf
