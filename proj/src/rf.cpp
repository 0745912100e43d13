#include "satlab/rf.hpp"

#include "satlab/error.hpp"

namespace satlab::rf {

std::string_view to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::Conv: return "conv";
        case LayerKind::Pool: return "pool";
        case LayerKind::Dense: return "dense";
        case LayerKind::Flatten: return "flatten";
        case LayerKind::Activation: return "activation";
        case LayerKind::Norm: return "norm";
    }
    return "?";
}

std::optional<LayerKind> parse_kind(std::string_view text) {
    for (auto k : {LayerKind::Conv, LayerKind::Pool, LayerKind::Dense, LayerKind::Flatten, LayerKind::Activation,
                   LayerKind::Norm}) {
        if (to_string(k) == text) return k;
    }
    return std::nullopt;
}

std::vector<ReceptiveFieldInfo> receptive_fields(std::span<const LayerGeometry> arch) {
    std::vector<ReceptiveFieldInfo> out;
    out.reserve(arch.size());
    std::size_t rf = 1;
    std::size_t jump = 1;
    bool global = false;
    bool flattened = false;
    for (const auto& layer : arch) {
        if (is_spatial(layer.kind)) {
            if (global || flattened) {
                throw Error(ErrorKind::IllFormedArchitecture,
                            "spatial layer '" + layer.name + "' follows a dense or flatten layer");
            }
            if (layer.kernel < 1 || layer.stride < 1) {
                throw Error(ErrorKind::IllFormedArchitecture, "layer '" + layer.name + "' needs kernel and stride >= 1");
            }
            rf += (layer.kernel - 1) * jump;
            jump *= layer.stride;
        } else if (layer.kind == LayerKind::Dense) {
            global = true;
        } else if (layer.kind == LayerKind::Flatten) {
            flattened = true;
        }
        out.push_back({layer.name, layer.kind, rf, jump, global, false});
    }
    return out;
}

std::optional<std::size_t> border_layer(std::span<const ReceptiveFieldInfo> rfs, std::size_t input_resolution) {
    for (std::size_t i = 0; i < rfs.size(); ++i) {
        if (!rfs[i].global && rfs[i].rf > input_resolution) return i;
    }
    return std::nullopt;
}

std::vector<ReceptiveFieldInfo> receptive_field_table(std::span<const LayerGeometry> arch,
                                                      std::size_t input_resolution) {
    auto table = receptive_fields(arch);
    if (auto b = border_layer(table, input_resolution)) table[*b].is_border = true;
    return table;
}

std::vector<std::string> predict_unproductive(std::span<const LayerGeometry> arch, std::size_t input_resolution) {
    const auto table = receptive_fields(arch);
    std::vector<std::string> out;
    const auto border = border_layer(table, input_resolution);
    if (!border) return out;
    for (std::size_t i = *border; i < arch.size(); ++i) {
        if (is_spatial(arch[i].kind)) out.push_back(arch[i].name);
    }
    return out;
}

}  // namespace satlab::rf
