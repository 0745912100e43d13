#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <string_view>

namespace satlab::cli {

using Json = nlohmann::ordered_json;

/// SATLAB_SEED, if set. A malformed value is a usage error.
std::optional<std::uint64_t> env_seed();

/// Writes through a sibling temporary and renames, so a failed run never
/// leaves a half-written file behind.
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

/// Output goes to `out` when given, else standard output.
void emit(const std::filesystem::path& out, std::string_view text);

std::string read_text(const std::filesystem::path& path);

/// `p` relative to `base_dir` unless absolute or empty.
std::filesystem::path resolve_from(const std::filesystem::path& base_dir, const std::filesystem::path& p);

/// Layer name made safe for a file name.
std::string file_stem_for(std::string_view layer);

/// Seed, input hash and toolkit version.
Json reproducibility(std::optional<std::uint64_t> seed, std::string_view input_hash);
std::string reproducibility_line(std::optional<std::uint64_t> seed, std::string_view input_hash);

/// Fixed-precision number for human tables.
std::string fixed(double v, int digits = 4);

void check_format(std::string_view format, std::initializer_list<std::string_view> allowed);

}  // namespace satlab::cli
