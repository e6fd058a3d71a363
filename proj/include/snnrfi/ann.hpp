#pragma once

#include <span>

#include <Eigen/Dense>

#include "snnrfi/data.hpp"
#include "snnrfi/network.hpp"
#include "snnrfi/trainer.hpp"

namespace snnrfi {

/// Non-spiking baseline with the same dense widths as the SNN: every time
/// step (column) of a patch is classified independently through
/// ReLU(W1 x + b1) -> sigmoid(W2 h + b2). Returns probabilities [out x T].
Eigen::MatrixXd ann_forward(const Network& net, const Grid<float>& values);

/// Mean binary cross-entropy of one patch and, optionally, its gradient
/// added to `grads` scaled by `scale`. Ignored pixels are skipped.
double ann_loss(const Network& net, const Patch& patch, Gradients* grads = nullptr, double scale = 1.0);

/// Flags probabilities above 0.5; the probability doubles as the score.
Decoded ann_decode(const Eigen::MatrixXd& probabilities);

TrainingHistory ann_train(Network& net, std::span<const Patch> patches, const TrainingConfig& cfg);

}  // namespace snnrfi
