#include "experiment_io.hpp"

#include "satlab/io/config.hpp"
#include "util.hpp"

namespace satlab::cli {

LoadedExperiment load_experiment(const std::filesystem::path& path) {
    const auto file = io::KeyValueFile::load(path);
    LoadedExperiment out;
    out.source = path;
    // SATLAB_SEED is only consulted (and validated) when the file has no seed.
    out.config = nn::parse_experiment(file, file.contains("seed") ? std::nullopt : env_seed());
    const auto dir = path.parent_path();
    out.config.dataset.path = resolve_from(dir, out.config.dataset.path);
    for (auto& d : out.config.sweep_datasets) d.path = resolve_from(dir, d.path);
    return out;
}

}  // namespace satlab::cli
