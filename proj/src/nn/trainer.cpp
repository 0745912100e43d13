#include "satlab/nn/trainer.hpp"

#include <algorithm>
#include <cmath>

#include "satlab/error.hpp"
#include "satlab/random.hpp"

namespace satlab::nn {

std::string_view to_string(Augmentation a) {
    switch (a) {
        case Augmentation::None: return "none";
        case Augmentation::Normalize: return "normalize";
        case Augmentation::NormalizeCropFlip: return "normalize+crop+flip";
    }
    return "?";
}

std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::Sgd ? "sgd" : "adam"; }

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        throw Error(ErrorKind::InvalidConfig, "learning_rate must be positive");
    }
    if (momentum < 0.0 || momentum >= 1.0) throw Error(ErrorKind::InvalidConfig, "momentum must lie in [0, 1)");
    if (lr_decay.every_epochs > 0 && !(lr_decay.factor > 0.0 && lr_decay.factor <= 1.0)) {
        throw Error(ErrorKind::InvalidConfig, "lr_decay factor must lie in (0, 1]");
    }
    if (batch_size < 1) throw Error(ErrorKind::InvalidConfig, "batch_size must be at least 1");
    if (epochs < 1) throw Error(ErrorKind::InvalidConfig, "epochs must be at least 1");
    if (measure && measure_samples < 2) throw Error(ErrorKind::InvalidConfig, "measure_samples must be at least 2");
    if (!(delta > 0.0 && delta <= 1.0)) throw Error(ErrorKind::InvalidConfig, "delta must lie in (0, 1]");
}

double learning_rate_at(const TrainConfig& cfg, std::size_t epoch) {
    if (cfg.lr_decay.every_epochs == 0 || epoch == 0) return cfg.learning_rate;
    const auto steps = static_cast<double>((epoch - 1) / cfg.lr_decay.every_epochs);
    return cfg.learning_rate * std::pow(cfg.lr_decay.factor, steps);
}

DivergedLossError::DivergedLossError(std::size_t epoch, std::vector<EpochRecord> partial)
    : Error(ErrorKind::DivergedLoss, "training loss became non-finite in epoch " + std::to_string(epoch)),
      partial_(std::move(partial)) {}

EvalResult evaluate(Network& net, const DataSplit& split, std::size_t batch_size) {
    EvalResult r;
    const std::size_t n = split.size();
    if (n == 0) return r;
    std::size_t hits = 0;
    std::vector<std::size_t> rows;
    for (std::size_t s0 = 0; s0 < n; s0 += batch_size) {
        const std::size_t sn = std::min(batch_size, n - s0);
        rows.resize(sn);
        for (std::size_t i = 0; i < sn; ++i) rows[i] = s0 + i;
        const Tensor x = split.inputs.gather(rows);
        const std::span<const std::size_t> y(split.labels.data() + s0, sn);
        const Tensor logits = net.logits(x);
        r.loss += softmax_cross_entropy(logits, y).loss * static_cast<double>(sn);
        for (std::size_t i = 0; i < sn; ++i) {
            auto z = logits.sample(i);
            const auto pred = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
            hits += pred == y[i];
        }
    }
    r.loss /= static_cast<double>(n);
    r.accuracy = static_cast<double>(hits) / static_cast<double>(n);
    return r;
}

namespace {

template <typename Visit>
void for_each_chunk(Network& net, const Tensor& inputs, std::size_t batch_size, Visit&& visit) {
    const std::size_t n = inputs.samples();
    std::vector<std::size_t> rows;
    for (std::size_t s0 = 0; s0 < n; s0 += batch_size) {
        const std::size_t sn = std::min(batch_size, n - s0);
        rows.resize(sn);
        for (std::size_t i = 0; i < sn; ++i) rows[i] = s0 + i;
        auto fwd = net.forward(inputs.gather(rows), true, false);
        visit(fwd.activations, s0, sn);
    }
}

std::size_t feature_dim(const std::vector<std::size_t>& per_sample) {
    // Conv maps: channels; dense outputs: units.
    return per_sample.size() == 3 ? per_sample[0] : shape_product(per_sample);
}

}  // namespace

std::vector<spectral::SaturationResult> measure_saturation(Network& net, const Tensor& inputs, double delta,
                                                           std::size_t batch_size) {
    std::vector<spectral::CovarianceAccumulator> acc;
    for (const auto& shape : net.captured_shapes()) acc.emplace_back(feature_dim(shape));
    for_each_chunk(net, inputs, batch_size, [&](const std::vector<CapturedActivation>& acts, std::size_t, std::size_t) {
        for (std::size_t l = 0; l < acts.size(); ++l) acc[l].accumulate(acts[l].values);
    });
    std::vector<spectral::SaturationResult> out;
    for (std::size_t l = 0; l < acc.size(); ++l) {
        out.push_back(spectral::saturation(acc[l].finalize(), acc[l].dim(), delta, net.captured_layers()[l]));
    }
    return out;
}

std::vector<std::size_t> measurement_indices(std::size_t n, std::size_t limit, std::uint64_t seed) {
    Rng rng(seed ^ 0x5bd1e9955bd1e995ull);
    auto perm = rng.permutation(n);
    perm.resize(std::min(limit, n));
    std::sort(perm.begin(), perm.end());
    return perm;
}

Dataset prepare(const Dataset& data, Augmentation aug) {
    if (aug == Augmentation::None) return data;
    return normalized(data);
}

std::vector<EpochRecord> train(Network& net, const Dataset& data, const TrainConfig& cfg, const EpochCallback& on_epoch) {
    cfg.validate();
    data.validate();
    if (cfg.augmentation == Augmentation::NormalizeCropFlip && data.input_shape.size() != 3) {
        throw Error(ErrorKind::InvalidConfig, "crop/flip augmentation needs image inputs");
    }
    Rng rng(cfg.seed);
    Optimizer optimizer(cfg.optimizer, cfg.momentum);
    const auto params = net.parameters();

    Tensor measure_inputs;
    if (cfg.measure) {
        measure_inputs = data.train.inputs.gather(measurement_indices(data.train.size(), cfg.measure_samples, cfg.seed));
    }

    std::vector<EpochRecord> records;
    std::vector<std::size_t> order(data.train.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<std::size_t> batch_labels;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        EpochRecord rec;
        rec.epoch = epoch;
        rec.learning_rate = learning_rate_at(cfg, epoch);
        rng.shuffle(std::span<std::size_t>(order));
        double loss_sum = 0.0;
        for (std::size_t s0 = 0; s0 < order.size(); s0 += cfg.batch_size) {
            const std::size_t sn = std::min(cfg.batch_size, order.size() - s0);
            const std::span<const std::size_t> rows(order.data() + s0, sn);
            Tensor x = data.train.inputs.gather(rows);
            if (cfg.augmentation == Augmentation::NormalizeCropFlip) random_crop_flip(x, 4, rng);
            batch_labels.resize(sn);
            for (std::size_t i = 0; i < sn; ++i) batch_labels[i] = data.train.labels[rows[i]];
            const double loss = net.loss_and_gradients(x, batch_labels);
            if (!std::isfinite(loss)) throw DivergedLossError(epoch, records);
            loss_sum += loss * static_cast<double>(sn);
            optimizer.step(params, rec.learning_rate);
        }
        rec.train_loss = loss_sum / static_cast<double>(order.size());
        const auto val = evaluate(net, data.val.size() ? data.val : data.train);
        rec.val_loss = val.loss;
        rec.val_accuracy = val.accuracy;
        if (!std::isfinite(rec.val_loss)) throw DivergedLossError(epoch, records);
        if (cfg.measure) rec.per_layer_saturation = measure_saturation(net, measure_inputs, cfg.delta);
        if (on_epoch) on_epoch(rec);
        records.push_back(std::move(rec));
    }
    return records;
}

std::vector<CapturedActivation> capture_activations(Network& net, const Tensor& inputs, std::size_t batch_size) {
    std::vector<CapturedActivation> out;
    const std::size_t n = inputs.samples();
    for (std::size_t l = 0; l < net.captured_layers().size(); ++l) {
        std::vector<std::size_t> shape{n};
        const auto& per = net.captured_shapes()[l];
        shape.insert(shape.end(), per.begin(), per.end());
        out.push_back({net.captured_layers()[l], Tensor(shape)});
    }
    for_each_chunk(net, inputs, batch_size, [&](const std::vector<CapturedActivation>& acts, std::size_t s0, std::size_t) {
        for (std::size_t l = 0; l < acts.size(); ++l) {
            auto src = acts[l].values.values();
            std::copy(src.begin(), src.end(), out[l].values.values().begin() + static_cast<std::ptrdiff_t>(s0 * out[l].values.sample_size()));
        }
    });
    return out;
}

std::vector<linalg::Matrix> capture_probe_features(Network& net, const Tensor& inputs, std::size_t pool_cap,
                                                   std::size_t batch_size) {
    std::vector<linalg::Matrix> out(net.captured_layers().size());
    const std::size_t n = inputs.samples();
    for_each_chunk(net, inputs, batch_size, [&](const std::vector<CapturedActivation>& acts, std::size_t s0, std::size_t sn) {
        for (std::size_t l = 0; l < acts.size(); ++l) {
            const auto pooled = probes::probe_features(acts[l].values, pool_cap);
            if (out[l].rows() == 0) out[l] = linalg::Matrix(n, pooled.cols());
            for (std::size_t i = 0; i < sn; ++i) {
                auto src = pooled.row(i);
                std::copy(src.begin(), src.end(), out[l].data().begin() + static_cast<std::ptrdiff_t>((s0 + i) * pooled.cols()));
            }
        }
    });
    return out;
}

}  // namespace satlab::nn
