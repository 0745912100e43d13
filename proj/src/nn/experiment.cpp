#include "satlab/nn/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <future>
#include <map>
#include <sstream>

#include "satlab/error.hpp"

namespace satlab::nn {

namespace {

std::vector<std::pair<std::string, std::string>> key_values(std::istringstream& tokens, const std::string& what) {
    std::vector<std::pair<std::string, std::string>> out;
    std::string kv;
    while (tokens >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == kv.size()) {
            throw Error(ErrorKind::ParseError, what + ": expected key=value, got '" + kv + "'");
        }
        out.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
    }
    return out;
}

template <typename T>
T parse_number(const std::string& text, const std::string& field) {
    T v{};
    auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
        throw Error(ErrorKind::ParseError, field + ": '" + text + "' is not a valid number");
    }
    return v;
}

std::vector<std::size_t> parse_shape(const std::string& text, const std::string& field) {
    std::vector<std::size_t> shape;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto x = text.find('x', start);
        shape.push_back(parse_number<std::size_t>(text.substr(start, x - start), field));
        if (x == std::string::npos) break;
        start = x + 1;
    }
    if (shape.size() != 1 && shape.size() != 3) throw Error(ErrorKind::InvalidConfig, field + ": shape must be d or CxHxW");
    return shape;
}

bool parse_bool(const std::string& text, const std::string& field) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw Error(ErrorKind::ParseError, field + ": expected true/false, got '" + text + "'");
}

}  // namespace

DatasetConfig DatasetConfig::parse(std::string_view line) {
    std::istringstream tokens{std::string(line)};
    DatasetConfig cfg;
    if (!(tokens >> cfg.kind)) throw Error(ErrorKind::ParseError, "dataset: missing kind");
    if (cfg.kind != "blobs" && cfg.kind != "textures" && cfg.kind != "mnist" && cfg.kind != "cifar10") {
        throw Error(ErrorKind::ParseError, "dataset: unknown kind '" + cfg.kind + "'");
    }
    for (const auto& [k, v] : key_values(tokens, "dataset")) {
        const std::string field = "dataset." + k;
        if (k == "path") cfg.path = v;
        else if (k == "classes") cfg.classes = parse_number<std::size_t>(v, field);
        else if (k == "shape") cfg.shape = parse_shape(v, field);
        else if (k == "latent") cfg.latent_dim = parse_number<std::size_t>(v, field);
        else if (k == "separation") cfg.separation = parse_number<double>(v, field);
        else if (k == "spread") cfg.spread = parse_number<double>(v, field);
        else if (k == "noise") cfg.noise = parse_number<double>(v, field);
        else if (k == "size") cfg.size = parse_number<std::size_t>(v, field);
        else if (k == "pad") cfg.pad = parse_number<std::size_t>(v, field);
        else if (k == "train") cfg.train = parse_number<std::size_t>(v, field);
        else if (k == "val") cfg.val = parse_number<std::size_t>(v, field);
        else if (k == "seed") cfg.seed = parse_number<std::uint64_t>(v, field);
        else if (k == "fallback") cfg.fallback = v;
        else throw Error(ErrorKind::ParseError, "dataset: unknown key '" + k + "'");
    }
    if (cfg.classes < 2) throw Error(ErrorKind::InvalidConfig, "dataset.classes must be at least 2");
    if ((cfg.kind == "mnist" || cfg.kind == "cifar10") && cfg.path.empty() && cfg.fallback.empty()) {
        throw Error(ErrorKind::InvalidConfig, "dataset.path is required for " + cfg.kind);
    }
    return cfg;
}

Dataset load_dataset(const DatasetConfig& cfg) {
    Dataset d;
    if (cfg.kind == "blobs") {
        BlobSpec spec;
        spec.classes = cfg.classes;
        spec.shape = cfg.shape;
        spec.latent_dim = cfg.latent_dim;
        spec.separation = cfg.separation;
        spec.spread = cfg.spread;
        spec.noise = cfg.noise < 0.0 ? 0.0 : cfg.noise;
        if (cfg.train) spec.train = cfg.train;
        if (cfg.val) spec.val = cfg.val;
        spec.seed = cfg.seed;
        d = make_blobs(spec);
    } else if (cfg.kind == "textures" ||
               (cfg.kind == "cifar10" && cfg.fallback == "textures" &&
                (cfg.path.empty() || !std::filesystem::exists(cfg.path / "test_batch.bin")))) {
        TextureSpec spec;
        spec.classes = cfg.classes;
        spec.size = cfg.size;
        if (cfg.noise >= 0.0) spec.noise = cfg.noise;
        if (cfg.train) spec.train = cfg.train;
        if (cfg.val) spec.val = cfg.val;
        spec.seed = cfg.seed;
        d = make_textures(spec);
        if (cfg.kind == "cifar10") d.name = "textures(cifar10-standin)";
    } else if (cfg.kind == "mnist") {
        d = load_mnist(cfg.path, cfg.train, cfg.val);
    } else {
        d = load_cifar10(cfg.path, cfg.train, cfg.val);
    }
    if (cfg.pad) d = pad_to(d, cfg.pad);
    return d;
}

LayerDef parse_layer(std::string_view line, std::size_t index_of_kind) {
    std::istringstream tokens{std::string(line)};
    std::string kind;
    if (!(tokens >> kind)) throw Error(ErrorKind::ParseError, "layer: missing kind");
    LayerDef def;
    if (kind == "dense") def.type = LayerType::Dense;
    else if (kind == "conv") def.type = LayerType::Conv;
    else if (kind == "maxpool" || kind == "pool") def.type = LayerType::MaxPool;
    else if (kind == "relu") def.type = LayerType::Relu;
    else if (kind == "flatten") def.type = LayerType::Flatten;
    else if (kind == "classifier") def.type = LayerType::Classifier;
    else throw Error(ErrorKind::ParseError, "layer: unknown kind '" + kind + "'");
    const std::string prefix = kind == "maxpool" ? "pool" : kind;
    def.name = def.type == LayerType::Classifier ? "classifier" : prefix + std::to_string(index_of_kind);
    bool has_width = false, has_kernel = false;
    for (const auto& [k, v] : key_values(tokens, "layer")) {
        const std::string field = "layer." + k;
        if (k == "name") def.name = v;
        else if (k == "units" || k == "filters") {
            def.width = parse_number<std::size_t>(v, field);
            has_width = true;
        } else if (k == "kernel") {
            def.kernel = parse_number<std::size_t>(v, field);
            has_kernel = true;
        } else if (k == "stride") def.stride = parse_number<std::size_t>(v, field);
        else if (k == "padding") def.padding = parse_number<std::size_t>(v, field);
        else throw Error(ErrorKind::ParseError, "layer: unknown key '" + k + "'");
    }
    if ((def.type == LayerType::Dense || def.type == LayerType::Conv) && (!has_width || def.width == 0)) {
        throw Error(ErrorKind::InvalidConfig, "layer " + def.name + ": units/filters must be at least 1");
    }
    if ((def.type == LayerType::Conv || def.type == LayerType::MaxPool) && (!has_kernel || def.kernel == 0)) {
        throw Error(ErrorKind::InvalidConfig, "layer " + def.name + ": kernel must be at least 1");
    }
    if (def.stride == 0) throw Error(ErrorKind::InvalidConfig, "layer " + def.name + ": stride must be at least 1");
    return def;
}

ExperimentConfig parse_experiment(const io::KeyValueFile& file, std::optional<std::uint64_t> seed_fallback) {
    static const std::vector<std::string> known = {
        "run_id",        "seed",          "dataset",         "layer",           "width_scale",
        "optimizer",     "learning_rate", "momentum",        "lr_decay",        "batch_size",
        "epochs",        "augmentation",  "measure.samples", "measure.delta",   "measure.enabled",
        "sweep.mode",    "sweep.scales",  "sweep.dataset",   "dump.train_samples", "dump.val_samples"};
    for (const auto& e : file.entries()) {
        if (std::find(known.begin(), known.end(), e.key) == known.end()) {
            throw Error(ErrorKind::ParseError, "config line " + std::to_string(e.line) + ": unknown key '" + e.key + "'");
        }
    }

    ExperimentConfig cfg;
    cfg.config_hash = io::fnv1a_hex(file.canonical());
    if (auto v = file.get("run_id")) cfg.run_id = *v;
    if (auto v = file.get("seed")) cfg.train.seed = parse_number<std::uint64_t>(*v, "seed");
    else if (seed_fallback) cfg.train.seed = *seed_fallback;
    if (auto v = file.get("dataset")) cfg.dataset = DatasetConfig::parse(*v);

    std::map<LayerType, std::size_t> counts;
    for (const auto& line : file.get_all("layer")) {
        std::istringstream peek(line);
        std::string kind;
        peek >> kind;
        LayerType t = LayerType::Dense;
        if (kind == "conv") t = LayerType::Conv;
        else if (kind == "maxpool" || kind == "pool") t = LayerType::MaxPool;
        else if (kind == "relu") t = LayerType::Relu;
        else if (kind == "flatten") t = LayerType::Flatten;
        else if (kind == "classifier") t = LayerType::Classifier;
        cfg.network.layers.push_back(parse_layer(line, ++counts[t]));
    }
    if (cfg.network.layers.empty() || cfg.network.layers.back().type != LayerType::Classifier) {
        cfg.network.layers.push_back(LayerDef{"classifier", LayerType::Classifier});
    }
    if (auto v = file.get("width_scale")) cfg.network.width_scale = WidthScale::parse(*v);

    auto& t = cfg.train;
    if (auto v = file.get("optimizer")) {
        if (*v == "sgd") t.optimizer = OptimizerKind::Sgd;
        else if (*v == "adam") t.optimizer = OptimizerKind::Adam;
        else throw Error(ErrorKind::InvalidConfig, "optimizer must be sgd or adam, got '" + *v + "'");
    }
    if (auto v = file.get("learning_rate")) t.learning_rate = parse_number<double>(*v, "learning_rate");
    if (auto v = file.get("momentum")) t.momentum = parse_number<double>(*v, "momentum");
    if (auto v = file.get("lr_decay")) {
        std::istringstream parts(*v);
        std::string mode;
        parts >> mode;
        if (mode == "none") {
            t.lr_decay = {};
        } else if (mode == "step") {
            std::string every, factor;
            if (!(parts >> every >> factor)) throw Error(ErrorKind::ParseError, "lr_decay: expected 'step <epochs> <factor>'");
            t.lr_decay.every_epochs = parse_number<std::size_t>(every, "lr_decay");
            t.lr_decay.factor = parse_number<double>(factor, "lr_decay");
            if (t.lr_decay.every_epochs == 0) throw Error(ErrorKind::InvalidConfig, "lr_decay: step interval must be at least 1");
        } else {
            throw Error(ErrorKind::ParseError, "lr_decay: expected 'none' or 'step <epochs> <factor>'");
        }
    }
    if (auto v = file.get("batch_size")) t.batch_size = parse_number<std::size_t>(*v, "batch_size");
    if (auto v = file.get("epochs")) t.epochs = parse_number<std::size_t>(*v, "epochs");
    if (auto v = file.get("augmentation")) {
        if (*v == "none") t.augmentation = Augmentation::None;
        else if (*v == "normalize") t.augmentation = Augmentation::Normalize;
        else if (*v == "normalize+crop+flip") t.augmentation = Augmentation::NormalizeCropFlip;
        else throw Error(ErrorKind::InvalidConfig, "augmentation must be none, normalize or normalize+crop+flip");
    }
    if (auto v = file.get("measure.samples")) t.measure_samples = parse_number<std::size_t>(*v, "measure.samples");
    if (auto v = file.get("measure.delta")) t.delta = parse_number<double>(*v, "measure.delta");
    if (auto v = file.get("measure.enabled")) t.measure = parse_bool(*v, "measure.enabled");
    if (auto v = file.get("sweep.mode")) {
        if (*v != "capacity" && *v != "difficulty") throw Error(ErrorKind::InvalidConfig, "sweep.mode must be capacity or difficulty");
        cfg.sweep_mode = *v;
    }
    if (auto v = file.get("sweep.scales")) {
        std::string item;
        std::istringstream items(*v);
        while (std::getline(items, item, ',')) {
            const auto b = item.find_first_not_of(' '), e = item.find_last_not_of(' ');
            if (b == std::string::npos) continue;
            cfg.sweep_scales.push_back(WidthScale::parse(item.substr(b, e - b + 1)));
        }
    }
    for (const auto& line : file.get_all("sweep.dataset")) cfg.sweep_datasets.push_back(DatasetConfig::parse(line));
    if (auto v = file.get("dump.train_samples")) cfg.dump_train_samples = parse_number<std::size_t>(*v, "dump.train_samples");
    if (auto v = file.get("dump.val_samples")) cfg.dump_val_samples = parse_number<std::size_t>(*v, "dump.val_samples");

    // Range checks name the offending field.
    if (!(t.learning_rate > 0.0)) throw Error(ErrorKind::InvalidConfig, "learning_rate must be positive");
    t.validate();
    return cfg;
}

Network build_network(const NetworkSpec& spec, const Dataset& prepared, const TrainConfig& cfg) {
    return Network(spec, prepared.input_shape, prepared.class_count, cfg.seed ^ 0x243f6a8885a308d3ull);
}

RunResult run_experiment(const NetworkSpec& spec, const Dataset& prepared, const TrainConfig& cfg, std::string run_id) {
    Network net = build_network(spec, prepared, cfg);
    RunResult r;
    r.run_id = std::move(run_id);
    r.dataset = prepared.name;
    r.scale = spec.width_scale;
    r.parameters = net.parameter_count();
    r.records = train(net, prepared, cfg);
    const auto& last = r.records.back();
    r.val_accuracy = last.val_accuracy;
    if (!last.per_layer_saturation.empty()) r.average_saturation = spectral::average_saturation(last.per_layer_saturation);
    return r;
}

namespace {

template <typename Job>
std::vector<RunResult> run_jobs(std::size_t count, std::size_t jobs, Job&& job) {
    std::vector<RunResult> out(count);
    jobs = std::max<std::size_t>(1, jobs);
    for (std::size_t start = 0; start < count; start += jobs) {
        std::vector<std::future<RunResult>> running;
        for (std::size_t i = start; i < std::min(count, start + jobs); ++i) {
            running.push_back(std::async(jobs == 1 ? std::launch::deferred : std::launch::async, job, i));
        }
        for (std::size_t i = 0; i < running.size(); ++i) out[start + i] = running[i].get();
    }
    return out;
}

}  // namespace

std::vector<RunResult> capacity_sweep(const NetworkSpec& base, std::span<const WidthScale> scales, const Dataset& data,
                                      const TrainConfig& cfg, std::size_t jobs) {
    if (scales.empty()) throw Error(ErrorKind::EmptyInput, "capacity sweep needs at least one scale");
    const Dataset prepared = prepare(data, cfg.augmentation);
    return run_jobs(scales.size(), jobs, [&](std::size_t i) {
        return run_experiment(base.scaled(scales[i]), prepared, cfg, "scale_" + std::to_string(scales[i].divisor));
    });
}

std::vector<RunResult> difficulty_sweep(const NetworkSpec& spec, std::span<const Dataset> ladder, const TrainConfig& cfg,
                                        std::size_t jobs) {
    if (ladder.empty()) throw Error(ErrorKind::EmptyInput, "difficulty sweep needs at least one dataset");
    return run_jobs(ladder.size(), jobs, [&](std::size_t i) {
        return run_experiment(spec, prepare(ladder[i], cfg.augmentation), cfg, "rank" + std::to_string(i) + "_" + ladder[i].name);
    });
}

std::vector<io::ReportRow> run_rows(const RunResult& run) {
    std::vector<io::ReportRow> rows;
    for (const auto& rec : run.records) {
        const long e = static_cast<long>(rec.epoch);
        rows.push_back({run.run_id, "train", io::Metric::Loss, e, rec.train_loss});
        rows.push_back({run.run_id, "val", io::Metric::Loss, e, rec.val_loss});
        rows.push_back({run.run_id, "val", io::Metric::Accuracy, e, rec.val_accuracy});
        for (const auto& s : rec.per_layer_saturation) rows.push_back({run.run_id, s.layer, io::Metric::Saturation, e, s.saturation});
    }
    if (!run.records.empty() && !run.records.back().per_layer_saturation.empty()) {
        rows.push_back({run.run_id, "mean", io::Metric::Saturation, std::nullopt, run.average_saturation});
    }
    return rows;
}

}  // namespace satlab::nn
