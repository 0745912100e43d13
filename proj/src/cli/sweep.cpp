#include <iostream>
#include <sstream>

#include "commands.hpp"
#include "experiment_io.hpp"
#include "satlab/io/report.hpp"
#include "satlab/nn/experiment.hpp"
#include "util.hpp"

namespace satlab::cli {

int cmd_sweep(const SweepOptions& opts) {
    check_format(opts.format, {"table", "json"});
    if (opts.jobs < 1) throw Error(ErrorKind::InvalidConfig, "--jobs must be at least 1");
    if (!opts.out.empty() && std::filesystem::exists(opts.out) && !std::filesystem::is_directory(opts.out)) {
        throw Error(ErrorKind::InvalidConfig, "--out " + opts.out.string() + " exists and is not a directory");
    }
    const LoadedExperiment exp = load_experiment(opts.config);
    const auto& cfg = exp.config;
    const bool capacity = cfg.sweep_mode == "capacity";
    if (!capacity && cfg.sweep_datasets.empty()) {
        throw Error(ErrorKind::InvalidConfig, "sweep.dataset is required in difficulty mode");
    }

    std::vector<nn::RunResult> runs;
    if (capacity) {
        std::vector<nn::WidthScale> scales = cfg.sweep_scales;
        if (scales.empty()) scales = {{1}, {2}, {4}, {8}, {16}};
        const nn::Dataset data = nn::load_dataset(cfg.dataset);
        if (!opts.quiet) std::cerr << "capacity sweep over " << scales.size() << " scales on " << data.name << '\n';
        runs = nn::capacity_sweep(cfg.network, scales, data, cfg.train, opts.jobs);
    } else {
        std::vector<nn::Dataset> ladder;
        for (const auto& d : cfg.sweep_datasets) ladder.push_back(nn::load_dataset(d));
        if (!opts.quiet) std::cerr << "difficulty sweep over " << ladder.size() << " datasets\n";
        runs = nn::difficulty_sweep(cfg.network, ladder, cfg.train, opts.jobs);
    }

    Json j;
    j["reproducibility"] = reproducibility(cfg.train.seed, cfg.config_hash);
    j["reproducibility"]["config_hash"] = cfg.config_hash;
    j["mode"] = cfg.sweep_mode;
    j["runs"] = Json::array();
    for (const auto& r : runs) {
        j["runs"].push_back({{"run_id", r.run_id},
                             {"dataset", r.dataset},
                             {"scale", r.scale.label()},
                             {"average_saturation", r.average_saturation},
                             {"val_accuracy", r.val_accuracy},
                             {"parameters", r.parameters}});
    }
    const std::string json_text = j.dump(2) + "\n";

    if (opts.format == "json") {
        emit({}, json_text);
    } else {
        std::ostringstream out;
        out << (capacity ? "scale  " : "dataset                       ") << "  s_mean   val_acc  parameters\n";
        for (const auto& r : runs) {
            char buf[200];
            if (capacity) {
                std::snprintf(buf, sizeof buf, "%-7s  %-7s  %-7s  %zu\n", r.scale.label().c_str(),
                              fixed(r.average_saturation).c_str(), fixed(r.val_accuracy).c_str(), r.parameters);
            } else {
                std::snprintf(buf, sizeof buf, "%-30s  %-7s  %-7s  %zu\n", r.dataset.c_str(),
                              fixed(r.average_saturation).c_str(), fixed(r.val_accuracy).c_str(), r.parameters);
            }
            out << buf;
        }
        emit({}, out.str());
        std::cerr << reproducibility_line(cfg.train.seed, cfg.config_hash) << '\n';
    }

    if (!opts.out.empty()) {
        std::vector<io::ReportRow> rows;
        for (const auto& r : runs) {
            const auto more = nn::run_rows(r);
            rows.insert(rows.end(), more.begin(), more.end());
        }
        write_file_atomic(opts.out / "report.csv", io::emit_report(rows, io::ReportFormat::Csv));
        write_file_atomic(opts.out / "sweep.json", json_text);
    }
    return kExitOk;
}

}  // namespace satlab::cli
