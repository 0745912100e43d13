#pragma once

#include <filesystem>
#include <string_view>

#include "satlab/rf.hpp"

namespace satlab::io {

/// Plain-text architecture description, one layer per line:
///
///     name kind key=value ...
///
/// kinds: conv, pool, dense, flatten, activation, norm. conv and pool need
/// `kernel`; `stride` defaults to 1 and `padding` to 0. `filters` and
/// `units` are accepted so the same file can describe widths. Blank lines
/// and text after '#' are ignored.
rf::ArchitectureSpec parse_architecture(std::string_view text);
rf::ArchitectureSpec load_architecture(const std::filesystem::path& path);

}  // namespace satlab::io
