#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "satlab/error.hpp"

namespace satlab::cli {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

int exit_code_for(ErrorKind kind);

struct TrainOptions {
    std::filesystem::path config;
    std::filesystem::path out;
    bool quiet = false;
};

struct AnalyzeOptions {
    std::filesystem::path manifest;
    double delta = 0.99;
    std::string format = "json";
    std::filesystem::path out;
    std::string run_id = "analyze";
};

struct ProbeOptions {
    std::filesystem::path manifest;
    std::filesystem::path labels;
    std::optional<std::uint64_t> seed;
    double test_fraction = 0.3;
    std::size_t pool_cap = 4;
    std::size_t epochs = 40;
    double learning_rate = 0.1;
    std::string format = "json";
    std::filesystem::path out;
    std::string run_id = "probe";
};

struct RfOptions {
    std::filesystem::path arch;
    std::size_t resolution = 0;
    std::string format = "table";
    std::filesystem::path out;
};

struct SweepOptions {
    std::filesystem::path config;
    std::filesystem::path out;
    std::size_t jobs = 1;
    std::string format = "table";
    bool quiet = false;
};

struct ReportOptions {
    std::filesystem::path in;
    std::string format = "csv";
    std::filesystem::path out;
};

int cmd_train(const TrainOptions& opts);
int cmd_analyze(const AnalyzeOptions& opts);
int cmd_probe(const ProbeOptions& opts);
int cmd_rf(const RfOptions& opts);
int cmd_sweep(const SweepOptions& opts);
int cmd_report(const ReportOptions& opts);

}  // namespace satlab::cli
