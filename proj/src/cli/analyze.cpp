#include <charconv>
#include <iostream>
#include <sstream>

#include "commands.hpp"
#include "satlab/io/config.hpp"
#include "satlab/io/dump.hpp"
#include "satlab/io/report.hpp"
#include "satlab/probes.hpp"
#include "satlab/spectral.hpp"
#include "util.hpp"

namespace satlab::cli {

namespace {

constexpr std::size_t kChunkSamples = 256;

struct LoadedManifest {
    io::Manifest manifest;
    std::filesystem::path dir;
    std::string hash;
};

LoadedManifest load_manifest(const std::filesystem::path& path) {
    LoadedManifest m;
    m.manifest = io::read_manifest(path);
    m.dir = path.parent_path();
    m.hash = io::fnv1a_hex(read_text(path));
    if (m.manifest.layers.empty()) throw Error(ErrorKind::EmptyInput, "manifest lists no layers");
    return m;
}

// N×d for dense layers, N×C×H×W for conv layers: either way dims[1].
std::size_t feature_dim(const io::ActivationDumpHeader& h) {
    return h.dims[1];
}

struct LayerSaturation {
    spectral::SaturationResult result;
    std::size_t samples = 0;
};

LayerSaturation analyze_dump(const std::filesystem::path& path, const std::string& layer, double delta) {
    io::DumpReader reader(path);
    const std::size_t samples = reader.samples_remaining();
    spectral::CovarianceAccumulator acc(feature_dim(reader.header()));
    for (Tensor chunk = reader.next(kChunkSamples); chunk.samples() > 0; chunk = reader.next(kChunkSamples))
        acc.accumulate(chunk);
    return {spectral::saturation(acc.finalize(), acc.dim(), delta, layer), samples};
}

Json tail_to_json(const spectral::TailReport& tail, const std::vector<spectral::SaturationResult>& layers) {
    Json j;
    j["start_index"] = tail.start_index ? Json(*tail.start_index) : Json(nullptr);
    j["start_layer"] = tail.start_index ? Json(layers[*tail.start_index].layer) : Json(nullptr);
    j["members"] = tail.member_layers;
    j["threshold_per_layer"] = tail.threshold_per_layer;
    j["low_saturated"] = tail.low_saturated;
    return j;
}

struct LabelFile {
    std::vector<std::size_t> labels;
    // Present when every line names its split.
    std::optional<probes::Split> split;
};

LabelFile read_labels(const std::filesystem::path& path) {
    std::istringstream in(read_text(path));
    LabelFile out;
    probes::Split split;
    std::size_t with_split = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        std::string label_text, split_text, extra;
        if (!(fields >> label_text)) continue;
        fields >> split_text >> extra;
        std::size_t label = 0;
        const auto [end, ec] = std::from_chars(label_text.data(), label_text.data() + label_text.size(), label);
        if (ec != std::errc() || end != label_text.data() + label_text.size() || !extra.empty()) {
            throw Error(ErrorKind::ParseError,
                        path.string() + " line " + std::to_string(line_no) + ": expected '<label> [train|test]'");
        }
        const std::size_t index = out.labels.size();
        out.labels.push_back(label);
        if (split_text.empty()) continue;
        if (split_text == "train")
            split.train.push_back(index);
        else if (split_text == "test")
            split.test.push_back(index);
        else
            throw Error(ErrorKind::ParseError,
                        path.string() + " line " + std::to_string(line_no) + ": unknown split '" + split_text + "'");
        ++with_split;
    }
    if (out.labels.empty()) throw Error(ErrorKind::EmptyInput, path.string() + " has no labels");
    if (with_split == out.labels.size())
        out.split = std::move(split);
    else if (with_split != 0)
        throw Error(ErrorKind::ParseError, path.string() + ": either every line names a split or none does");
    return out;
}

linalg::Matrix dump_features(const std::filesystem::path& path, std::size_t cap) {
    io::DumpReader reader(path);
    const std::size_t n = reader.samples_remaining();
    linalg::Matrix features;
    std::size_t row = 0;
    for (Tensor chunk = reader.next(kChunkSamples); chunk.samples() > 0; chunk = reader.next(kChunkSamples)) {
        const linalg::Matrix f = probes::probe_features(chunk, cap);
        if (features.rows() == 0) features = linalg::Matrix(n, f.cols());
        std::copy(f.data().begin(), f.data().end(),
                  features.data().begin() + static_cast<std::ptrdiff_t>(row * f.cols()));
        row += f.rows();
    }
    return features;
}

}  // namespace

int cmd_analyze(const AnalyzeOptions& opts) {
    check_format(opts.format, {"json", "csv", "table"});
    if (!(opts.delta > 0.0 && opts.delta <= 1.0)) {
        throw Error(ErrorKind::InvalidConfig, "--delta must lie in (0, 1]");
    }
    const LoadedManifest m = load_manifest(opts.manifest);

    std::vector<spectral::SaturationResult> results;
    std::vector<std::size_t> samples;
    for (const auto& entry : m.manifest.layers) {
        auto r = analyze_dump(resolve_from(m.dir, entry.file), entry.layer, opts.delta);
        results.push_back(std::move(r.result));
        samples.push_back(r.samples);
    }
    const double mean = spectral::average_saturation(results);
    std::optional<spectral::TailReport> tail;
    if (results.size() >= 3) tail = spectral::detect_tail(results);

    std::string text;
    if (opts.format == "json") {
        Json j;
        j["reproducibility"] = reproducibility(std::nullopt, m.hash);
        j["delta"] = opts.delta;
        j["conv_layout"] = spectral::kConvLayoutConvention;
        j["activation"] = m.manifest.activation;
        j["layers"] = Json::array();
        for (std::size_t i = 0; i < results.size(); ++i) {
            const auto& r = results[i];
            j["layers"].push_back({{"layer", r.layer},
                                   {"samples", samples[i]},
                                   {"extrinsic_dim", r.extrinsic_dim},
                                   {"relevant_dim", r.relevant_dim},
                                   {"saturation", r.saturation}});
        }
        j["average_saturation"] = mean;
        j["tail"] = tail ? tail_to_json(*tail, results) : Json(nullptr);
        text = j.dump(2) + "\n";
    } else if (opts.format == "csv") {
        std::vector<io::ReportRow> rows;
        for (const auto& r : results)
            rows.push_back({opts.run_id, r.layer, io::Metric::Saturation, std::nullopt, r.saturation});
        rows.push_back({opts.run_id, "mean", io::Metric::Saturation, std::nullopt, mean});
        text = io::emit_report(rows, io::ReportFormat::Csv);
        std::cerr << reproducibility_line(std::nullopt, m.hash) << '\n';
    } else {
        std::ostringstream out;
        out << "layer                 dim   k     saturation  tail\n";
        for (std::size_t i = 0; i < results.size(); ++i) {
            const auto& r = results[i];
            char buf[160];
            const bool member = tail && tail->start_index && i >= *tail->start_index;
            std::snprintf(buf, sizeof buf, "%-20s  %-5zu %-5zu %-10s  %s\n", r.layer.c_str(), r.extrinsic_dim,
                          r.relevant_dim, fixed(r.saturation).c_str(), member ? "*" : "");
            out << buf;
        }
        out << "average saturation  " << fixed(mean) << '\n';
        if (!tail)
            out << "tail: needs at least 3 layers\n";
        else if (!tail->start_index)
            out << "tail: none\n";
        else
            out << "tail: starts at " << results[*tail->start_index].layer << '\n';
        text = out.str();
        std::cerr << reproducibility_line(std::nullopt, m.hash) << '\n';
    }
    emit(opts.out, text);
    return kExitOk;
}

int cmd_probe(const ProbeOptions& opts) {
    check_format(opts.format, {"json", "csv", "table"});
    probes::ProbeConfig cfg;
    cfg.learning_rate = opts.learning_rate;
    cfg.epochs = opts.epochs;
    cfg.pool_cap = opts.pool_cap;
    cfg.seed = opts.seed ? *opts.seed : env_seed().value_or(0);
    cfg.validate();
    if (!(opts.test_fraction > 0.0 && opts.test_fraction < 1.0)) {
        throw Error(ErrorKind::InvalidConfig, "--test-fraction must lie in (0, 1)");
    }

    const LoadedManifest m = load_manifest(opts.manifest);
    const LabelFile labels = read_labels(opts.labels);
    const probes::Split split =
        labels.split ? *labels.split : probes::random_split(labels.labels.size(), opts.test_fraction, cfg.seed);
    const std::string input_hash = io::fnv1a_hex(m.hash + io::fnv1a_hex(read_text(opts.labels)));

    std::vector<probes::ProbeResult> results;
    for (const auto& entry : m.manifest.layers) {
        const auto path = resolve_from(m.dir, entry.file);
        const linalg::Matrix features = dump_features(path, cfg.pool_cap);
        if (features.rows() != labels.labels.size()) {
            throw Error(ErrorKind::SampleMisalignment, "layer '" + entry.layer + "' has " +
                                                           std::to_string(features.rows()) + " samples, labels " +
                                                           std::to_string(labels.labels.size()));
        }
        results.push_back(probes::train_probe(features, labels.labels, split, cfg, entry.layer));
    }

    std::string text;
    if (opts.format == "json") {
        Json j;
        j["reproducibility"] = reproducibility(cfg.seed, input_hash);
        j["split"] = {{"source", labels.split ? "labels file" : "random"},
                      {"train", split.train.size()},
                      {"test", split.test.size()}};
        j["probe"] = {{"learning_rate", cfg.learning_rate},
                      {"epochs", cfg.epochs},
                      {"batch_size", cfg.batch_size},
                      {"l2", cfg.l2},
                      {"pool_cap", cfg.pool_cap}};
        j["layers"] = Json::array();
        for (const auto& r : results) {
            j["layers"].push_back({{"layer", r.layer},
                                   {"feature_dim", r.feature_dim},
                                   {"train_accuracy", r.train_accuracy},
                                   {"test_accuracy", r.test_accuracy}});
        }
        text = j.dump(2) + "\n";
    } else if (opts.format == "csv") {
        std::vector<io::ReportRow> rows;
        for (const auto& r : results)
            rows.push_back({opts.run_id, r.layer, io::Metric::ProbeAccuracy, std::nullopt, r.test_accuracy});
        text = io::emit_report(rows, io::ReportFormat::Csv);
        std::cerr << reproducibility_line(cfg.seed, input_hash) << '\n';
    } else {
        std::ostringstream out;
        out << "layer                 features  train     test\n";
        for (const auto& r : results) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "%-20s  %-8zu  %-8s  %s\n", r.layer.c_str(), r.feature_dim,
                          fixed(r.train_accuracy).c_str(), fixed(r.test_accuracy).c_str());
            out << buf;
        }
        text = out.str();
        std::cerr << reproducibility_line(cfg.seed, input_hash) << '\n';
    }
    emit(opts.out, text);
    return kExitOk;
}

}  // namespace satlab::cli
