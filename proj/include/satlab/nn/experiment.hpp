#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "satlab/io/config.hpp"
#include "satlab/io/report.hpp"
#include "satlab/nn/dataset.hpp"
#include "satlab/nn/network.hpp"
#include "satlab/nn/trainer.hpp"

namespace satlab::nn {

/// One `dataset = kind key=value ...` line.
///   blobs    classes= shape= (e.g. 64 or 1x28x28) latent= separation= spread= noise=
///   textures classes= size= noise=
///   mnist    path= pad=
///   cifar10  path= fallback=textures
/// All kinds accept train=, val=, seed=.
struct DatasetConfig {
    std::string kind = "blobs";
    std::filesystem::path path;
    std::size_t classes = 10;
    std::vector<std::size_t> shape{64};
    std::size_t latent_dim = 0;
    double separation = 4.0;
    double spread = 1.0;
    double noise = -1.0;  // < 0: generator default
    std::size_t size = 32;
    std::size_t pad = 0;
    std::size_t train = 0;
    std::size_t val = 0;
    std::uint64_t seed = 1;
    std::string fallback;

    static DatasetConfig parse(std::string_view line);
};

/// Loads or generates the dataset described by `cfg`.
Dataset load_dataset(const DatasetConfig& cfg);

/// One `layer = kind key=value ...` line: dense units=, conv filters= kernel=
/// stride= padding=, maxpool kernel= stride= padding=, relu, flatten,
/// classifier. Optional name=; otherwise kind + running index.
LayerDef parse_layer(std::string_view line, std::size_t index_of_kind);

struct ExperimentConfig {
    std::string run_id = "run";
    DatasetConfig dataset;
    NetworkSpec network;
    TrainConfig train;
    std::string sweep_mode = "capacity";
    std::vector<WidthScale> sweep_scales;
    std::vector<DatasetConfig> sweep_datasets;
    std::size_t dump_train_samples = 1000;
    std::size_t dump_val_samples = 500;
    std::string config_hash;
};

/// Syntax problems (unknown keys, unparsable numbers) throw ParseError;
/// out-of-range values throw InvalidConfig naming the field. `seed_fallback`
/// is used when the file has no `seed` key.
ExperimentConfig parse_experiment(const io::KeyValueFile& file, std::optional<std::uint64_t> seed_fallback = {});

struct RunResult {
    std::string run_id;
    std::string dataset;
    WidthScale scale;
    std::vector<EpochRecord> records;
    double average_saturation = 0.0;
    double val_accuracy = 0.0;
    std::size_t parameters = 0;
};

/// The network `run_experiment` trains: weights seeded from the training seed.
Network build_network(const NetworkSpec& spec, const Dataset& prepared, const TrainConfig& cfg);

RunResult run_experiment(const NetworkSpec& spec, const Dataset& prepared, const TrainConfig& cfg, std::string run_id);

/// One model per width scale on the same data.
std::vector<RunResult> capacity_sweep(const NetworkSpec& base, std::span<const WidthScale> scales, const Dataset& data,
                                      const TrainConfig& cfg, std::size_t jobs = 1);

/// The same architecture on each dataset of a difficulty ladder.
std::vector<RunResult> difficulty_sweep(const NetworkSpec& spec, std::span<const Dataset> ladder, const TrainConfig& cfg,
                                        std::size_t jobs = 1);

/// Long-format rows for a run: train/val loss, val accuracy, per-layer
/// saturation per epoch, and the final average saturation (layer "mean").
std::vector<io::ReportRow> run_rows(const RunResult& run);

}  // namespace satlab::nn
