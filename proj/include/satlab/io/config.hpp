#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace satlab::io {

/// `key = value` lines; '#' starts a comment. Keys may repeat (e.g. `layer`),
/// in which case all values are kept in file order.
class KeyValueFile {
public:
    struct Entry {
        std::string key;
        std::string value;
        std::size_t line = 0;
    };

    static KeyValueFile parse(std::string_view text);
    static KeyValueFile load(const std::filesystem::path& path);

    const std::vector<Entry>& entries() const noexcept { return entries_; }
    /// Last value for `key`.
    std::optional<std::string> get(std::string_view key) const;
    std::vector<std::string> get_all(std::string_view key) const;
    bool contains(std::string_view key) const { return get(key).has_value(); }

    /// Canonical text (one `key = value` per line, file order). Hashing this
    /// makes the config hash independent of comments and spacing.
    std::string canonical() const;

private:
    std::vector<Entry> entries_;
};

/// 64-bit FNV-1a, hex encoded.
std::string fnv1a_hex(std::string_view bytes);

}  // namespace satlab::io
