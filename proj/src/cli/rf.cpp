#include "satlab/rf.hpp"

#include <sstream>

#include "commands.hpp"
#include "satlab/io/architecture.hpp"
#include "satlab/io/config.hpp"
#include "util.hpp"

namespace satlab::cli {

int cmd_rf(const RfOptions& opts) {
    check_format(opts.format, {"table", "json"});
    if (opts.resolution < 1) throw Error(ErrorKind::InvalidConfig, "--resolution must be at least 1");
    const std::string source = read_text(opts.arch);
    const std::string hash = io::fnv1a_hex(source);
    const rf::ArchitectureSpec arch = io::parse_architecture(source);
    const auto table = rf::receptive_field_table(arch, opts.resolution);
    const auto border = rf::border_layer(table, opts.resolution);
    const auto unproductive = rf::predict_unproductive(arch, opts.resolution);

    Json j;
    j["reproducibility"] = reproducibility(std::nullopt, hash);
    j["resolution"] = opts.resolution;
    j["layers"] = Json::array();
    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto& r = table[i];
        j["layers"].push_back({{"layer", r.layer},
                               {"kind", rf::to_string(r.kind)},
                               {"kernel", arch[i].kernel},
                               {"stride", arch[i].stride},
                               {"rf", r.rf},
                               {"jump", r.jump},
                               {"global", r.global},
                               {"is_border", r.is_border}});
    }
    j["border_index"] = border ? Json(*border) : Json(nullptr);
    j["border_layer"] = border ? Json(table[*border].layer) : Json(nullptr);
    j["unproductive"] = unproductive;
    const std::string json_text = j.dump(2) + "\n";

    if (opts.format == "json") {
        emit({}, json_text);
    } else {
        std::ostringstream out;
        out << "layer                 kind        k   s   rf      jump\n";
        for (std::size_t i = 0; i < table.size(); ++i) {
            const auto& r = table[i];
            char buf[200];
            const std::string rf_text = r.global ? "global" : std::to_string(r.rf);
            std::snprintf(buf, sizeof buf, "%-20s  %-10s  %-3zu %-3zu %-7s %-6zu%s\n", r.layer.c_str(),
                          std::string(rf::to_string(r.kind)).c_str(), arch[i].kernel, arch[i].stride, rf_text.c_str(),
                          r.jump, r.is_border ? "  <- border" : "");
            out << buf;
        }
        out << "resolution " << opts.resolution << ": ";
        if (border)
            out << "border layer " << table[*border].layer << " (index " << *border << ")\n";
        else
            out << "no border layer\n";
        out << "predicted unproductive:";
        if (unproductive.empty()) out << " none";
        for (const auto& name : unproductive) out << ' ' << name;
        out << '\n';
        emit({}, out.str());
    }
    if (!opts.out.empty()) write_file_atomic(opts.out, json_text);
    return kExitOk;
}

}  // namespace satlab::cli
