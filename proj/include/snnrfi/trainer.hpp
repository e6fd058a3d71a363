#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "snnrfi/encoding.hpp"
#include "snnrfi/losses.hpp"
#include "snnrfi/network.hpp"

namespace snnrfi {

struct TrainingConfig {
    int batch_size = 32;
    int max_epochs = 10;
    double initial_lr = 1e-3;
    int lr_patience = 3;
    int stop_patience = 6;
    double lr_factor = 0.5;
    /// Minimum decrease of the monitored loss that counts as an improvement.
    double min_delta = 1e-4;
    /// Share of training samples held out to drive scheduling and early stopping.
    double validation_fraction = 0.1;
    std::uint64_t seed = 0;

    void validate() const;
};

/// One encoded training patch.
struct EncodedSample {
    SpikeTrain input;
    Target target;
    Grid<std::uint8_t> ignore;  // [pixels x T]; empty when nothing is padded
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double lr = 0.0;
};

struct TrainingHistory {
    std::vector<EpochRecord> epochs;
    bool stopped_early = false;
    /// Epoch whose weights were kept (best monitored loss).
    int best_epoch = 0;
    double seconds = 0.0;
};

/// Loss of one sample; when `grads` is non-null the parameter gradient scaled
/// by `scale` is added to it.
using SampleObjective = std::function<double(std::size_t sample, Gradients* grads, double scale)>;

/// Mini-batch Adam loop shared by the spiking network and the ANN baseline.
/// A seeded validation split drives plateau LR reduction and early stopping
/// (the training loss is monitored when the split would be empty). The
/// parameters of the best monitored epoch are restored at the end. Throws
/// TrainingError on a non-finite loss.
TrainingHistory fit(Network& net, std::size_t n_samples, const TrainingConfig& cfg, const SampleObjective& objective);

/// Surrogate-gradient BPTT training of a spiking network on encoded patches.
TrainingHistory train(Network& net, std::span<const EncodedSample> samples, const TrainingConfig& cfg,
                      const LossConfig& loss, std::size_t exposure);

/// Batch-averaged loss and gradient for the given sample indices.
double bptt_grads(const Network& net, std::span<const EncodedSample> samples, std::span<const std::size_t> batch,
                  const LossConfig& loss, std::size_t exposure, Gradients& grads);

/// Mean loss over samples (no gradients).
double mean_loss(const Network& net, std::span<const EncodedSample> samples, const LossConfig& loss,
                 std::size_t exposure);

/// CSV with columns epoch,train_loss,val_loss,lr.
void write_history_csv(const std::filesystem::path& path, const TrainingHistory& history);

}  // namespace snnrfi
