#include <algorithm>
#include <iostream>
#include <sstream>

#include "commands.hpp"
#include "experiment_io.hpp"
#include "satlab/io/dump.hpp"
#include "satlab/io/report.hpp"
#include "satlab/nn/experiment.hpp"
#include "satlab/spectral.hpp"
#include "util.hpp"

namespace satlab::cli {

namespace {

std::string epochs_csv(const std::vector<nn::EpochRecord>& records) {
    std::ostringstream out;
    out << "epoch,learning_rate,train_loss,val_loss,val_accuracy";
    if (!records.empty())
        for (const auto& s : records.front().per_layer_saturation) out << ",saturation." << s.layer;
    out << '\n';
    for (const auto& r : records) {
        out << r.epoch << ',' << io::format_double(r.learning_rate) << ',' << io::format_double(r.train_loss) << ','
            << io::format_double(r.val_loss) << ',' << io::format_double(r.val_accuracy);
        for (const auto& s : r.per_layer_saturation) out << ',' << io::format_double(s.saturation);
        out << '\n';
    }
    return out.str();
}

Json tail_json(const std::vector<spectral::SaturationResult>& layers) {
    if (layers.size() < 3) return nullptr;
    const auto tail = spectral::detect_tail(layers);
    Json j;
    j["start_index"] = tail.start_index ? Json(*tail.start_index) : Json(nullptr);
    j["start_layer"] = tail.start_index ? Json(layers[*tail.start_index].layer) : Json(nullptr);
    j["members"] = tail.member_layers;
    return j;
}

// First `n_train` training and `n_val` validation samples, in that order.
struct DumpPopulation {
    Tensor inputs;
    std::vector<std::size_t> labels;
    std::vector<bool> is_val;
};

DumpPopulation dump_population(const nn::Dataset& data, std::size_t n_train, std::size_t n_val) {
    n_train = std::min(n_train, data.train.size());
    n_val = std::min(n_val, data.val.size());
    const std::size_t per = data.train.inputs.sample_size();
    std::vector<std::size_t> shape{n_train + n_val};
    shape.insert(shape.end(), data.input_shape.begin(), data.input_shape.end());
    DumpPopulation p{Tensor(shape), {}, {}};
    auto dst = p.inputs.values();
    for (std::size_t i = 0; i < n_train; ++i) {
        std::copy_n(data.train.inputs.sample(i).begin(), per, dst.begin() + static_cast<std::ptrdiff_t>(i * per));
        p.labels.push_back(data.train.labels[i]);
        p.is_val.push_back(false);
    }
    for (std::size_t i = 0; i < n_val; ++i) {
        std::copy_n(data.val.inputs.sample(i).begin(), per,
                    dst.begin() + static_cast<std::ptrdiff_t>((n_train + i) * per));
        p.labels.push_back(data.val.labels[i]);
        p.is_val.push_back(true);
    }
    return p;
}

void write_dumps(nn::Network& net, const DumpPopulation& pop, const std::filesystem::path& out,
                 const std::string& run_id) {
    const std::size_t n = pop.inputs.samples();
    io::Manifest manifest;
    manifest.source = "satlab train " + run_id;
    std::vector<std::unique_ptr<io::DumpWriter>> writers;
    const auto& names = net.captured_layers();
    const auto& shapes = net.captured_shapes();
    std::filesystem::create_directories(out / "dumps");
    for (std::size_t l = 0; l < names.size(); ++l) {
        io::ActivationDumpHeader h;
        h.layer_name = names[l];
        h.dims.push_back(static_cast<std::uint32_t>(n));
        for (auto d : shapes[l]) h.dims.push_back(static_cast<std::uint32_t>(d));
        const std::string rel = "dumps/" + file_stem_for(names[l]) + ".satd";
        writers.push_back(std::make_unique<io::DumpWriter>(out / rel, h));
        manifest.layers.push_back({names[l], rel});
    }
    constexpr std::size_t kChunk = 256;
    for (std::size_t start = 0; start < n; start += kChunk) {
        std::vector<std::size_t> rows(std::min(kChunk, n - start));
        std::iota(rows.begin(), rows.end(), start);
        const auto fwd = net.forward(pop.inputs.gather(rows), true);
        for (std::size_t l = 0; l < writers.size(); ++l) writers[l]->append(fwd.activations[l].values);
    }
    for (auto& w : writers) w->close();
    io::write_manifest(out / "manifest.json", manifest);

    std::ostringstream labels;
    labels << "# label split, one line per dumped sample\n";
    for (std::size_t i = 0; i < n; ++i) labels << pop.labels[i] << ' ' << (pop.is_val[i] ? "test" : "train") << '\n';
    write_file_atomic(out / "labels.txt", labels.str());
}

Json run_json(const LoadedExperiment& exp, const nn::Dataset& data, nn::Network& net,
              const std::vector<nn::EpochRecord>& records, const std::string& status, std::size_t dumped_train,
              std::size_t dumped_val) {
    const auto& cfg = exp.config;
    Json j;
    j["run_id"] = cfg.run_id;
    j["status"] = status;
    j["reproducibility"] = reproducibility(cfg.train.seed, cfg.config_hash);
    j["reproducibility"]["config_hash"] = cfg.config_hash;
    j["dataset"] = {{"name", data.name},
                    {"input_shape", data.input_shape},
                    {"classes", data.class_count},
                    {"train", data.train.size()},
                    {"val", data.val.size()}};
    j["parameters"] = net.parameter_count();
    j["train"] = {{"optimizer", nn::to_string(cfg.train.optimizer)},
                  {"learning_rate", cfg.train.learning_rate},
                  {"momentum", cfg.train.momentum},
                  {"lr_decay_every", cfg.train.lr_decay.every_epochs},
                  {"lr_decay_factor", cfg.train.lr_decay.factor},
                  {"batch_size", cfg.train.batch_size},
                  {"epochs", cfg.train.epochs},
                  {"augmentation", nn::to_string(cfg.train.augmentation)}};
    j["measurement"] = {{"enabled", cfg.train.measure},
                        {"population", "train"},
                        {"samples", std::min(cfg.train.measure_samples, data.train.size())},
                        {"delta", cfg.train.delta},
                        {"conv_layout", spectral::kConvLayoutConvention}};
    j["epochs_completed"] = records.size();
    if (!records.empty()) {
        const auto& last = records.back();
        j["final"]["val_accuracy"] = last.val_accuracy;
        j["final"]["val_loss"] = last.val_loss;
        if (!last.per_layer_saturation.empty()) {
            j["final"]["average_saturation"] = spectral::average_saturation(last.per_layer_saturation);
            j["final"]["tail"] = tail_json(last.per_layer_saturation);
        }
    }
    j["dumps"] = {{"train_samples", dumped_train}, {"val_samples", dumped_val}, {"epoch", records.size()}};
    return j;
}

}  // namespace

int cmd_train(const TrainOptions& opts) {
    // Everything that can be a usage or data error happens before the
    // output directory is touched.
    if (std::filesystem::exists(opts.out) && !std::filesystem::is_directory(opts.out)) {
        throw Error(ErrorKind::InvalidConfig, "--out " + opts.out.string() + " exists and is not a directory");
    }
    const LoadedExperiment exp = load_experiment(opts.config);
    const auto& cfg = exp.config;
    const nn::Dataset data = nn::prepare(nn::load_dataset(cfg.dataset), cfg.train.augmentation);
    nn::Network net = nn::build_network(cfg.network, data, cfg.train);

    auto on_epoch = [&](const nn::EpochRecord& r) {
        if (opts.quiet) return;
        std::cerr << "epoch " << r.epoch << "  train_loss " << fixed(r.train_loss) << "  val_loss " << fixed(r.val_loss)
                  << "  val_acc " << fixed(r.val_accuracy);
        if (!r.per_layer_saturation.empty())
            std::cerr << "  s_mean " << fixed(spectral::average_saturation(r.per_layer_saturation));
        std::cerr << '\n';
    };

    std::vector<nn::EpochRecord> records;
    try {
        records = nn::train(net, data, cfg.train, on_epoch);
    } catch (const nn::DivergedLossError& e) {
        std::filesystem::create_directories(opts.out);
        write_file_atomic(opts.out / "epochs.csv", epochs_csv(e.partial()));
        write_file_atomic(opts.out / "run.json",
                          run_json(exp, data, net, e.partial(), "diverged", 0, 0).dump(2) + "\n");
        throw;
    }

    nn::RunResult result;
    result.run_id = cfg.run_id;
    result.dataset = data.name;
    result.scale = cfg.network.width_scale;
    result.records = records;
    result.val_accuracy = records.back().val_accuracy;
    result.parameters = net.parameter_count();
    if (!records.back().per_layer_saturation.empty())
        result.average_saturation = spectral::average_saturation(records.back().per_layer_saturation);

    const DumpPopulation pop = dump_population(data, cfg.dump_train_samples, cfg.dump_val_samples);
    const std::size_t dumped_val = static_cast<std::size_t>(std::count(pop.is_val.begin(), pop.is_val.end(), true));

    std::filesystem::create_directories(opts.out);
    write_file_atomic(opts.out / "epochs.csv", epochs_csv(records));
    write_file_atomic(opts.out / "report.csv", io::emit_report(nn::run_rows(result), io::ReportFormat::Csv));
    if (pop.inputs.samples() > 0) write_dumps(net, pop, opts.out, cfg.run_id);
    write_file_atomic(
        opts.out / "run.json",
        run_json(exp, data, net, records, "ok", pop.inputs.samples() - dumped_val, dumped_val).dump(2) + "\n");
    if (!opts.quiet) std::cerr << "wrote " << opts.out.string() << '\n';
    return kExitOk;
}

}  // namespace satlab::cli
