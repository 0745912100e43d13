#include "util.hpp"

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <iterator>

#include "satlab/error.hpp"

namespace satlab::cli {

std::optional<std::uint64_t> env_seed() {
    const char* raw = std::getenv("SATLAB_SEED");
    if (raw == nullptr || *raw == '\0') return std::nullopt;
    const std::string_view text(raw);
    std::uint64_t v = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || end != text.data() + text.size()) {
        throw Error(ErrorKind::InvalidConfig,
                    "SATLAB_SEED must be an unsigned integer, got '" + std::string(text) + "'");
    }
    return v;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".partial";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorKind::IoFailure, "cannot write " + path.string());
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out) throw Error(ErrorKind::IoFailure, "write to " + path.string() + " failed");
    }
    std::filesystem::rename(tmp, path);
}

void emit(const std::filesystem::path& out, std::string_view text) {
    if (out.empty()) {
        std::cout << text;
        std::cout.flush();
    } else {
        write_file_atomic(out, text);
    }
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoFailure, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::filesystem::path resolve_from(const std::filesystem::path& base_dir, const std::filesystem::path& p) {
    if (p.empty() || p.is_absolute()) return p;
    return base_dir / p;
}

std::string file_stem_for(std::string_view layer) {
    std::string out;
    for (char c : layer) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_' ||
                        c == '-' || c == '.';
        out.push_back(ok ? c : '_');
    }
    if (out.empty() || out.front() == '.') out.insert(out.begin(), '_');
    return out;
}

Json reproducibility(std::optional<std::uint64_t> seed, std::string_view input_hash) {
    Json j;
    j["toolkit"] = "satlab";
    j["version"] = SATLAB_VERSION;
    j["seed"] = seed ? Json(*seed) : Json(nullptr);
    j["input_hash"] = input_hash;
    return j;
}

std::string reproducibility_line(std::optional<std::uint64_t> seed, std::string_view input_hash) {
    std::string s = "# satlab " SATLAB_VERSION " seed=";
    s += seed ? std::to_string(*seed) : "none";
    s += " input_hash=";
    s += input_hash;
    return s;
}

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

void check_format(std::string_view format, std::initializer_list<std::string_view> allowed) {
    for (auto a : allowed)
        if (a == format) return;
    std::string list;
    for (auto a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
    throw Error(ErrorKind::InvalidConfig, "--format must be one of " + list + ", got '" + std::string(format) + "'");
}

}  // namespace satlab::cli
