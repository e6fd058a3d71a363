#include "snnrfi/pipeline.hpp"

#include <algorithm>
#include <array>
#include <random>

#include "snnrfi/ann.hpp"
#include "snnrfi/errors.hpp"

namespace snnrfi {
namespace {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t purpose) {
    std::seed_seq seq{seed & 0xffffffffu, seed >> 32, purpose};
    std::array<std::uint32_t, 2> words{};
    seq.generate(words.begin(), words.end());
    return (std::uint64_t{words[0]} << 32) | words[1];
}

constexpr std::uint64_t kTestStreamBase = std::uint64_t{1} << 40;

template <typename TileFn>
void predict_items(std::span<const LabelledSpectrogram> items, std::size_t patch_size, Prediction& out,
                   TileFn&& decode_patch) {
    for (const auto& item : items) {
        const Spectrogram normalized = normalize(item.spectrogram);
        const auto patches = make_patches(normalized, item.mask, patch_size);
        std::vector<Tile<std::uint8_t>> flag_tiles;
        std::vector<Tile<double>> score_tiles;
        for (std::size_t i = 0; i < patches.size(); ++i) {
            Decoded d = decode_patch(patches[i], i);
            flag_tiles.push_back({patches[i].origin_freq, patches[i].origin_time, std::move(d.flags)});
            score_tiles.push_back({patches[i].origin_freq, patches[i].origin_time, std::move(d.scores)});
        }
        const std::size_t rows = item.spectrogram.freq_channels();
        const std::size_t cols = item.spectrogram.time_steps();
        out.masks.push_back(stitch(rows, cols, flag_tiles));
        out.scores.push_back(stitch_grid<double>(rows, cols, score_tiles));
    }
}

}  // namespace

std::string ExperimentParams::method_name() const {
    return model == ModelKind::ann ? std::string("ann") : std::string(to_string(encoding));
}

ExperimentParams ExperimentParams::for_method(const std::string& name) {
    ExperimentParams p;
    if (name == "ann") {
        p.model = ModelKind::ann;
    } else {
        p.encoding = parse_encoding_method(name);
    }
    return p;
}

std::vector<Patch> dataset_patches(std::span<const LabelledSpectrogram> items, std::size_t patch_size) {
    std::vector<Patch> out;
    for (const auto& item : items) {
        auto patches = make_patches(normalize(item.spectrogram), item.mask, patch_size);
        std::move(patches.begin(), patches.end(), std::back_inserter(out));
    }
    return out;
}

std::vector<EncodedSample> encode_patches(std::span<const Patch> patches, const EncodingConfig& cfg,
                                          std::uint64_t stream_base) {
    cfg.validate();
    std::vector<EncodedSample> out;
    out.reserve(patches.size());
    for (std::size_t i = 0; i < patches.size(); ++i) {
        const Patch& p = patches[i];
        EncodedSample s{encode_input(p.values, cfg, stream_base + i), encode_target(p.flags, cfg), {}};
        if (std::any_of(p.ignore.data().begin(), p.ignore.data().end(), [](std::uint8_t v) { return v != 0; })) {
            s.ignore = p.ignore;
        }
        out.push_back(std::move(s));
    }
    return out;
}

Prediction predict(const Network& net, std::span<const LabelledSpectrogram> items, const EncodingConfig& cfg,
                   std::size_t patch_size) {
    cfg.validate();
    Prediction out;
    std::uint64_t stream = kTestStreamBase;
    predict_items(items, patch_size, out, [&](const Patch& p, std::size_t) {
        const SpikeTrain output = forward(net, encode_input(p.values, cfg, stream++));
        return decode_output(output, cfg);
    });
    return out;
}

Prediction predict_ann(const Network& net, std::span<const LabelledSpectrogram> items, std::size_t patch_size) {
    Prediction out;
    predict_items(items, patch_size, out,
                  [&](const Patch& p, std::size_t) { return ann_decode(ann_forward(net, p.values)); });
    return out;
}

Prediction predict_silent(std::span<const LabelledSpectrogram> items) {
    Prediction out;
    for (const auto& item : items) {
        const std::size_t rows = item.mask.flags.rows();
        const std::size_t cols = item.mask.flags.cols();
        out.masks.push_back(RFIMask{Grid<std::uint8_t>(rows, cols, 0)});
        out.scores.emplace_back(rows, cols, 0.0);
    }
    return out;
}

EvalRecord evaluate_predictions(const Prediction& prediction, std::span<const LabelledSpectrogram> items) {
    if (prediction.masks.size() != items.size() || prediction.scores.size() != items.size()) {
        throw ShapeError("evaluate_predictions: prediction count does not match items");
    }
    if (items.empty()) throw std::invalid_argument("evaluate_predictions: no items");
    std::vector<std::uint8_t> pred;
    std::vector<double> scores;
    std::vector<std::uint8_t> truth;
    for (std::size_t i = 0; i < items.size(); ++i) {
        const auto& t = items[i].mask.flags;
        if (!prediction.masks[i].flags.same_shape(t) || !prediction.scores[i].same_shape(t)) {
            throw ShapeError("evaluate_predictions: prediction shape does not match mask");
        }
        pred.insert(pred.end(), prediction.masks[i].flags.data().begin(), prediction.masks[i].flags.data().end());
        scores.insert(scores.end(), prediction.scores[i].data().begin(), prediction.scores[i].data().end());
        truth.insert(truth.end(), t.data().begin(), t.data().end());
    }
    return evaluate_pixels(pred, scores, truth);
}

EncodingConfig encoding_config(const ExperimentParams& params, std::uint64_t seed) {
    EncodingConfig cfg;
    cfg.method = params.encoding;
    cfg.exposure = params.encoding == EncodingMethod::delta ? 1 : params.exposure;
    cfg.rng_seed = derive_seed(seed, 3);
    return cfg;
}

TrainingConfig training_config(const ExperimentParams& params, std::uint64_t seed, const RunOptions& options) {
    TrainingConfig cfg;
    cfg.batch_size = params.batch_size;
    cfg.max_epochs = options.epoch_cap > 0 ? std::min(params.epochs, options.epoch_cap) : params.epochs;
    cfg.initial_lr = options.initial_lr;
    cfg.lr_patience = options.lr_patience;
    cfg.stop_patience = options.stop_patience;
    cfg.validation_fraction = options.validation_fraction;
    cfg.seed = derive_seed(seed, 2);
    return cfg;
}

TrainedModel train_model(std::span<const LabelledSpectrogram> items, const ExperimentParams& params,
                         std::uint64_t seed, const RunOptions& options) {
    if (items.empty()) throw DataError("training needs at least one spectrogram");
    std::vector<Patch> patches = dataset_patches(items, options.patch_size);
    if (options.max_train_patches > 0 && patches.size() > options.max_train_patches) {
        patches.resize(options.max_train_patches);
    }
    const TrainingConfig tcfg = training_config(params, seed, options);
    const std::uint64_t init_seed = derive_seed(seed, 1);
    const std::size_t P = options.patch_size;

    if (params.model == ModelKind::ann) {
        NetworkConfig ncfg;
        ncfg.input_width = P;
        ncfg.output_width = P;
        TrainedModel m{Network::initialized(ncfg, init_seed), {}};
        m.history = ann_train(m.network, patches, tcfg);
        return m;
    }

    const EncodingConfig ecfg = encoding_config(params, seed);
    const auto samples = encode_patches(patches, ecfg);
    TrainedModel m{Network::initialized(NetworkConfig::for_method(params.encoding, params.beta, P), init_seed), {}};
    m.history = train(m.network, samples, tcfg, LossConfig::for_method(params.encoding),
                      static_cast<std::size_t>(ecfg.effective_exposure()));
    return m;
}

EvalRecord evaluate_model(const Network& net, const ExperimentParams& params, std::uint64_t seed,
                          std::span<const LabelledSpectrogram> items, std::size_t patch_size) {
    if (params.model == ModelKind::ann) {
        return evaluate_predictions(predict_ann(net, items, patch_size), items);
    }
    return evaluate_predictions(predict(net, items, encoding_config(params, seed), patch_size), items);
}

RunResult run_experiment(const Dataset& dataset, const ExperimentParams& params, std::uint64_t seed,
                         const RunOptions& options) {
    if (dataset.train.empty() || dataset.test.empty()) {
        throw DataError("run_experiment needs non-empty train and test splits");
    }
    TrainedModel m = train_model(dataset.train, params, seed, options);
    const EvalRecord metrics = evaluate_model(m.network, params, seed, dataset.test, options.patch_size);
    return RunResult{std::move(m.network), std::move(m.history), metrics};
}

}  // namespace snnrfi
