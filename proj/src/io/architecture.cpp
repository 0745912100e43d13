#include "satlab/io/architecture.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "satlab/error.hpp"

namespace satlab::io {

namespace {

std::size_t parse_count(const std::string& text, std::size_t line, const std::string& key) {
    std::size_t v = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw Error(ErrorKind::ParseError,
                    "line " + std::to_string(line) + ": " + key + "='" + text + "' is not a non-negative integer");
    }
    return v;
}

}  // namespace

rf::ArchitectureSpec parse_architecture(std::string_view text) {
    rf::ArchitectureSpec arch;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
        std::istringstream tokens(raw);
        std::string name, kind_text;
        if (!(tokens >> name)) continue;
        if (!(tokens >> kind_text)) {
            throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": layer '" + name + "' has no kind");
        }
        auto kind = rf::parse_kind(kind_text);
        if (!kind) {
            throw Error(ErrorKind::UnknownKind,
                        "line " + std::to_string(line_no) + ": unknown layer kind '" + kind_text + "'");
        }
        rf::LayerGeometry g;
        g.name = name;
        g.kind = *kind;
        bool has_kernel = false;
        std::string kv;
        while (tokens >> kv) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos || eq == 0 || eq + 1 == kv.size()) {
                throw Error(ErrorKind::ParseError,
                            "line " + std::to_string(line_no) + ": expected key=value, got '" + kv + "'");
            }
            const std::string key = kv.substr(0, eq);
            const std::size_t value = parse_count(kv.substr(eq + 1), line_no, key);
            if (key == "kernel") {
                g.kernel = value;
                has_kernel = true;
            } else if (key == "stride") {
                g.stride = value;
            } else if (key == "padding") {
                g.padding = value;
            } else if (key == "filters" || key == "units") {
                // widths do not enter the geometry
            } else {
                throw Error(ErrorKind::ParseError, "line " + std::to_string(line_no) + ": unknown key '" + key + "'");
            }
        }
        if (rf::is_spatial(g.kind)) {
            if (!has_kernel) {
                throw Error(ErrorKind::MissingField,
                            "line " + std::to_string(line_no) + ": " + kind_text + " layer '" + name + "' needs kernel");
            }
            if (g.kernel < 1 || g.stride < 1) {
                throw Error(ErrorKind::ParseError,
                            "line " + std::to_string(line_no) + ": kernel and stride must be at least 1");
            }
        }
        arch.push_back(std::move(g));
    }
    if (arch.empty()) throw Error(ErrorKind::EmptyArchitecture, "architecture lists no layers");
    // Validates ordering (no spatial layer after dense/flatten).
    (void)rf::receptive_fields(arch);
    return arch;
}

rf::ArchitectureSpec load_architecture(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoFailure, "cannot open architecture " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_architecture(ss.str());
}

}  // namespace satlab::io
