#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "snnrfi/data.hpp"
#include "snnrfi/dataset_io.hpp"
#include "snnrfi/encoding.hpp"
#include "snnrfi/metrics.hpp"
#include "snnrfi/network.hpp"
#include "snnrfi/trainer.hpp"

namespace snnrfi {

enum class ModelKind { snn, ann };

/// The searched attributes plus the method they apply to.
struct ExperimentParams {
    ModelKind model = ModelKind::snn;
    EncodingMethod encoding = EncodingMethod::latency;
    int batch_size = 36;
    int epochs = 44;
    double beta = 0.727;
    /// Ignored for delta-modulation and the ANN.
    int exposure = 6;

    /// "ann" or the encoding method name.
    std::string method_name() const;
    /// Accepts "ann" or any encoding method name.
    static ExperimentParams for_method(const std::string& name);
};

/// Knobs that are fixed across trials.
struct RunOptions {
    std::size_t patch_size = 32;
    double initial_lr = 2e-2;
    int lr_patience = 5;
    int stop_patience = 10;
    double validation_fraction = 0.1;
    /// Upper bound on epochs actually trained (0 = no cap).
    int epoch_cap = 0;
    /// Training patches used per epoch, taken in order (0 = all).
    std::size_t max_train_patches = 0;
};

/// Normalised patches of every spectrogram, in item order then tiling order.
std::vector<Patch> dataset_patches(std::span<const LabelledSpectrogram> items, std::size_t patch_size);

/// Encodes inputs and targets. Patch i uses random stream `stream_base + i`.
std::vector<EncodedSample> encode_patches(std::span<const Patch> patches, const EncodingConfig& cfg,
                                          std::uint64_t stream_base = 0);

struct Prediction {
    std::vector<RFIMask> masks;
    std::vector<Grid<double>> scores;
};

/// Per-spectrogram stitched predictions of a spiking network.
Prediction predict(const Network& net, std::span<const LabelledSpectrogram> items, const EncodingConfig& cfg,
                   std::size_t patch_size);
Prediction predict_ann(const Network& net, std::span<const LabelledSpectrogram> items, std::size_t patch_size);
/// Predictions of a network that never flags anything (scores all zero).
Prediction predict_silent(std::span<const LabelledSpectrogram> items);

/// Pools every pixel of every item into a single EvalRecord.
EvalRecord evaluate_predictions(const Prediction& prediction, std::span<const LabelledSpectrogram> items);

EncodingConfig encoding_config(const ExperimentParams& params, std::uint64_t seed);
TrainingConfig training_config(const ExperimentParams& params, std::uint64_t seed, const RunOptions& options);

struct TrainedModel {
    Network network;
    TrainingHistory history;
};

/// Trains on `items` only (validation split included) with the given seed.
TrainedModel train_model(std::span<const LabelledSpectrogram> items, const ExperimentParams& params,
                         std::uint64_t seed, const RunOptions& options = {});

/// Predicts and scores `items`. The seed only matters for rate coding.
EvalRecord evaluate_model(const Network& net, const ExperimentParams& params, std::uint64_t seed,
                          std::span<const LabelledSpectrogram> items, std::size_t patch_size = 32);

struct RunResult {
    Network network;
    TrainingHistory history;
    EvalRecord metrics;
};

/// Trains on dataset.train with the given seed (weights, shuffling,
/// validation split and rate sampling) and evaluates on dataset.test.
RunResult run_experiment(const Dataset& dataset, const ExperimentParams& params, std::uint64_t seed,
                         const RunOptions& options = {});

}  // namespace snnrfi
