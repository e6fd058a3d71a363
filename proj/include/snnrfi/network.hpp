#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "snnrfi/encoding.hpp"

namespace snnrfi {

struct NetworkConfig {
    std::size_t input_width = 32;
    std::size_t hidden_width = 128;
    std::size_t output_width = 32;
    double beta = 0.9;
    double threshold = 1.0;
    /// Arctangent surrogate slope (alpha).
    double surrogate_slope = 2.0;
    /// Treat the subtractive reset as a constant during backprop. Off by default:
    /// letting gradients flow through the reset trains noticeably better here.
    bool detach_reset = false;

    void validate() const;
    /// Layer widths for an encoding method on `freq`-channel patches.
    static NetworkConfig for_method(EncodingMethod method, double beta, std::size_t freq = 32);
};

/// Mutable view of one dense layer inside the flat parameter vector.
struct DenseLayerView {
    Eigen::Map<Eigen::MatrixXd> weights;  // [out x in]
    Eigen::Map<Eigen::VectorXd> bias;
};

struct ConstDenseLayerView {
    Eigen::Map<const Eigen::MatrixXd> weights;
    Eigen::Map<const Eigen::VectorXd> bias;
};

/// Two dense layers (input -> hidden -> output). All parameters live in one
/// flat vector laid out as [W1 | b1 | W2 | b2], column-major weights.
class Network {
  public:
    explicit Network(NetworkConfig cfg = {});
    /// Weights and biases uniform in +/- 1/sqrt(fan_in).
    static Network initialized(const NetworkConfig& cfg, std::uint64_t seed);

    const NetworkConfig& config() const noexcept { return config_; }
    NetworkConfig& config() noexcept { return config_; }

    std::span<double> parameters() noexcept { return params_; }
    std::span<const double> parameters() const noexcept { return params_; }
    std::size_t parameter_count() const noexcept { return params_.size(); }

    DenseLayerView hidden_layer();
    DenseLayerView output_layer();
    ConstDenseLayerView hidden_layer() const;
    ConstDenseLayerView output_layer() const;

    bool all_finite() const;

    friend bool operator==(const Network& a, const Network& b) {
        return a.params_ == b.params_;
    }

  private:
    NetworkConfig config_;
    std::vector<double> params_;
};

/// Gradient buffer with the same flat layout as Network::parameters().
struct Gradients {
    std::vector<double> values;
    explicit Gradients(const Network& net) : values(net.parameter_count(), 0.0) {}
    void zero() { std::fill(values.begin(), values.end(), 0.0); }
};

/// Membrane potential per layer. Freshly zeroed for every patch.
struct LIFState {
    Eigen::VectorXd hidden;
    Eigen::VectorXd output;
    explicit LIFState(const NetworkConfig& cfg)
        : hidden(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cfg.hidden_width))),
          output(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cfg.output_width))) {}
    void reset() {
        hidden.setZero();
        output.setZero();
    }
};

enum class SpikeMode {
    heaviside,  // binary spikes, surrogate gradient in backprop
    relaxed,    // smooth atan spikes, exact gradient in backprop
};

/// Recorded simulation of one input, one column per global step.
struct ForwardTrace {
    SpikeMode mode = SpikeMode::heaviside;
    Eigen::MatrixXd hidden_pre;  // membrane before spike/reset
    Eigen::MatrixXd hidden_spikes;
    Eigen::MatrixXd output_pre;
    Eigen::MatrixXd output_spikes;  // [output_width x steps]
};

/// Unrolled simulation over all T * E steps from a zero state.
/// Throws ShapeError when the input width does not match the network.
ForwardTrace simulate(const Network& net, const SpikeTrain& input, SpikeMode mode = SpikeMode::heaviside);

/// Binary output spikes shaped like the input's time axis.
SpikeTrain forward(const Network& net, const SpikeTrain& input);

/// Real-valued outputs of the smooth relaxation, [output_width x steps].
Eigen::MatrixXd continuous_relaxation_forward(const Network& net, const SpikeTrain& input);

/// Backpropagation through time. `output_grad` holds dLoss/dOutputSpike per
/// step ([output_width x steps]); the parameter gradient is added to `grads`
/// scaled by `scale`.
void backward(const Network& net, const SpikeTrain& input, const ForwardTrace& trace,
              const Eigen::MatrixXd& output_grad, Gradients& grads, double scale = 1.0);

/// Converts a heaviside trace's output spikes into a SpikeTrain.
SpikeTrain output_spike_train(const ForwardTrace& trace, std::size_t time_steps, std::size_t exposure);

// -- checkpoints ---------------------------------------------------------------

struct CheckpointInfo {
    std::string model = "snn";  // "snn" or "ann"
    std::string encoding = "latency";
    int exposure = 1;
    std::uint64_t seed = 0;
    int epoch = 0;
    double train_seconds = 0.0;
};

/// Text key-value header terminated by "end_header", then the parameters as
/// little-endian f64.
void save_checkpoint(const std::filesystem::path& path, const Network& net, const CheckpointInfo& info);
Network load_checkpoint(const std::filesystem::path& path, CheckpointInfo* info = nullptr);

}  // namespace snnrfi
