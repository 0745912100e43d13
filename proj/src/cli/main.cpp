#include <CLI11.hpp>
#include <iostream>

#include "commands.hpp"
#include "satlab/nn/trainer.hpp"

namespace satlab::cli {

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidConfig:
            return kExitUsage;
        case ErrorKind::DivergedLoss:
        case ErrorKind::NonFinite:
        case ErrorKind::NonFiniteActivation:
        case ErrorKind::NonSymmetric:
        case ErrorKind::NotPositiveSemidefinite:
        case ErrorKind::ZeroVariance:
            return kExitNumeric;
        default:
            return kExitData;
    }
}

}  // namespace satlab::cli

int main(int argc, char** argv) {
    using namespace satlab::cli;
    CLI::App app{"Layer saturation, probe and receptive-field toolkit", "satlab"};
    app.set_version_flag("--version", SATLAB_VERSION);
    app.require_subcommand(1);

    TrainOptions train;
    auto* train_cmd = app.add_subcommand("train", "Train a network from an experiment config");
    train_cmd->add_option("--config", train.config, "Experiment config file")->required();
    train_cmd->add_option("--out", train.out, "Output directory")->required();
    train_cmd->add_flag("--quiet", train.quiet, "No progress output");

    AnalyzeOptions analyze;
    auto* analyze_cmd = app.add_subcommand("analyze", "Per-layer saturation and tail of captured dumps");
    analyze_cmd->add_option("--dumps", analyze.manifest, "Dump manifest (manifest.json)")->required();
    analyze_cmd->add_option("--delta", analyze.delta, "Variance threshold")->capture_default_str();
    analyze_cmd->add_option("--format", analyze.format, "json, csv or table")->capture_default_str();
    analyze_cmd->add_option("--out", analyze.out, "Write to this file instead of standard output");
    analyze_cmd->add_option("--run-id", analyze.run_id, "run_id for csv rows")->capture_default_str();

    ProbeOptions probe;
    auto* probe_cmd = app.add_subcommand("probe", "Train logistic-regression probes on captured dumps");
    probe_cmd->add_option("--dumps", probe.manifest, "Dump manifest (manifest.json)")->required();
    probe_cmd->add_option("--labels", probe.labels, "Labels file, one '<label> [train|test]' per sample")->required();
    probe_cmd->add_option("--seed", probe.seed, "Probe seed (default: SATLAB_SEED, then 0)");
    probe_cmd->add_option("--test-fraction", probe.test_fraction, "Held-out share when labels carry no split")
        ->capture_default_str();
    probe_cmd->add_option("--pool-cap", probe.pool_cap, "Max pooled grid side for conv dumps")->capture_default_str();
    probe_cmd->add_option("--epochs", probe.epochs, "Probe training epochs")->capture_default_str();
    probe_cmd->add_option("--learning-rate", probe.learning_rate, "Probe learning rate")->capture_default_str();
    probe_cmd->add_option("--format", probe.format, "json, csv or table")->capture_default_str();
    probe_cmd->add_option("--out", probe.out, "Write to this file instead of standard output");
    probe_cmd->add_option("--run-id", probe.run_id, "run_id for csv rows")->capture_default_str();

    RfOptions rf;
    auto* rf_cmd = app.add_subcommand("rf", "Receptive fields, border layer and predicted unproductive layers");
    rf_cmd->add_option("--arch", rf.arch, "Architecture file")->required();
    rf_cmd->add_option("--resolution", rf.resolution, "Input resolution in pixels")->required();
    rf_cmd->add_option("--format", rf.format, "table or json")->capture_default_str();
    rf_cmd->add_option("--out", rf.out, "Also write the JSON result to this file");

    SweepOptions sweep;
    auto* sweep_cmd = app.add_subcommand("sweep", "Capacity or difficulty sweep");
    sweep_cmd->add_option("--config", sweep.config, "Experiment config file")->required();
    sweep_cmd->add_option("--out", sweep.out, "Directory for report.csv and sweep.json");
    sweep_cmd->add_option("--jobs", sweep.jobs, "Runs trained in parallel")->capture_default_str();
    sweep_cmd->add_option("--format", sweep.format, "table or json")->capture_default_str();
    sweep_cmd->add_flag("--quiet", sweep.quiet, "No progress output");

    ReportOptions report;
    auto* report_cmd = app.add_subcommand("report", "Merge report files under a directory");
    report_cmd->add_option("--in", report.in, "Directory to scan")->required();
    report_cmd->add_option("--format", report.format, "csv or json")->capture_default_str();
    report_cmd->add_option("--out", report.out, "Write to this file instead of standard output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*train_cmd) return cmd_train(train);
        if (*analyze_cmd) return cmd_analyze(analyze);
        if (*probe_cmd) return cmd_probe(probe);
        if (*rf_cmd) return cmd_rf(rf);
        if (*sweep_cmd) return cmd_sweep(sweep);
        if (*report_cmd) return cmd_report(report);
    } catch (const satlab::Error& e) {
        std::cerr << "satlab: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "satlab: " << e.what() << '\n';
        return kExitData;
    }
    return kExitUsage;
}
