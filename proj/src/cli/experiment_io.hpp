#pragma once

#include <filesystem>

#include "satlab/nn/experiment.hpp"

namespace satlab::cli {

struct LoadedExperiment {
    nn::ExperimentConfig config;
    std::filesystem::path source;
};

/// Parses an experiment file. The seed falls back to SATLAB_SEED, then 0;
/// dataset paths are taken relative to the file's directory.
LoadedExperiment load_experiment(const std::filesystem::path& path);

}  // namespace satlab::cli
