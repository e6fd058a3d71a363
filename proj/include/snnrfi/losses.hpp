#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include <Eigen/Dense>

#include "snnrfi/encoding.hpp"

namespace snnrfi {

enum class LossKind {
    latency_mse,     // squared spike-indicator error summed over exposure and channel
    rate_count_mse,  // squared spike-count error per channel and time step
    huber,           // element-wise Huber on delta spike trains
    latency_time,    // squared error of a soft first-spike index (alternative reading)
};

std::string_view to_string(LossKind k);
LossKind parse_loss_kind(std::string_view name);

struct LossConfig {
    LossKind kind = LossKind::latency_mse;
    double huber_delta = 1.0;

    void validate() const;
    static LossConfig for_method(EncodingMethod m);
};

/// Per-sample loss and its gradient with respect to the network outputs.
/// Outputs and gradients are [channels x (T * E)] with column n = t * E + e.
struct LossValue {
    double value = 0.0;
    Eigen::MatrixXd grad;
};

/// Optional [pixels x T] mask; channel c maps to pixel row c % rows. Ignored
/// pixels contribute neither loss nor gradient.
using IgnoreMask = const Grid<std::uint8_t>*;

/// (1/T) * sum over t, e, c of (y - f)^2.
LossValue loss_latency(const Eigen::MatrixXd& y, const SpikeTrain& target, IgnoreMask ignore = nullptr);
/// Mean over (channel, t) of (sum_e y - target_count)^2.
LossValue loss_rate(const Eigen::MatrixXd& y, const Grid<double>& target_counts, std::size_t exposure,
                    IgnoreMask ignore = nullptr);
/// Sum over elements of huber(y - f, delta).
LossValue loss_huber(const Eigen::MatrixXd& y, const SpikeTrain& target, double delta, IgnoreMask ignore = nullptr);
/// (1/T) * sum over t, c of (tau - t_target)^2 with the soft first-spike index
/// tau = sum_e e * y_e + (E - 1) * (1 - sum_e y_e), exact for one-hot trains.
LossValue loss_latency_time(const Eigen::MatrixXd& y, const SpikeTrain& target, IgnoreMask ignore = nullptr);

LossValue compute_loss(const LossConfig& cfg, const Eigen::MatrixXd& y, const Target& target, std::size_t exposure,
                       IgnoreMask ignore = nullptr);

/// Batch mean of compute_loss() values.
double batch_loss(const LossConfig& cfg, std::span<const Eigen::MatrixXd> outputs, std::span<const Target> targets,
                  std::size_t exposure);

/// Spike-train convenience overloads (loss value only).
double loss_latency(const SpikeTrain& y, const SpikeTrain& target);
double loss_rate(const SpikeTrain& y, const Grid<double>& target_counts);
double loss_huber(const SpikeTrain& y, const SpikeTrain& target, double delta);

inline double huber(double r, double delta) {
    const double a = r < 0 ? -r : r;
    return a <= delta ? 0.5 * r * r : delta * (a - 0.5 * delta);
}

inline double huber_grad(double r, double delta) {
    if (r > delta) return delta;
    if (r < -delta) return -delta;
    return r;
}

/// Column-per-step real matrix of a spike train, [channels x steps].
Eigen::MatrixXd to_matrix(const SpikeTrain& train);

}  // namespace snnrfi
