#include "snnrfi/network.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "kv_text.hpp"
#include "snnrfi/errors.hpp"
#include "snnrfi/lif.hpp"

namespace snnrfi {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Offsets {
    std::size_t w1, b1, w2, b2, total;
};

Offsets offsets(const NetworkConfig& c) {
    Offsets o{};
    o.w1 = 0;
    o.b1 = o.w1 + c.hidden_width * c.input_width;
    o.w2 = o.b1 + c.hidden_width;
    o.b2 = o.w2 + c.output_width * c.hidden_width;
    o.total = o.b2 + c.output_width;
    return o;
}

const char* kCheckpointMagic = "# snnrfi checkpoint v1";

}  // namespace

void NetworkConfig::validate() const {
    if (input_width == 0 || hidden_width == 0 || output_width == 0) {
        throw ConfigError("network widths must be positive");
    }
    if (!(beta >= 0.0 && beta <= 1.0)) throw ConfigError("beta must lie in [0, 1]");
    if (!(threshold > 0.0)) throw ConfigError("threshold must be positive");
    if (!(surrogate_slope > 0.0)) throw ConfigError("surrogate slope must be positive");
}

NetworkConfig NetworkConfig::for_method(EncodingMethod method, double beta, std::size_t freq) {
    NetworkConfig cfg;
    cfg.input_width = snnrfi::input_width(method, freq);
    cfg.output_width = snnrfi::output_width(method, freq);
    cfg.beta = beta;
    return cfg;
}

Network::Network(NetworkConfig cfg) : config_(cfg) {
    config_.validate();
    params_.assign(offsets(config_).total, 0.0);
}

Network Network::initialized(const NetworkConfig& cfg, std::uint64_t seed) {
    Network net(cfg);
    std::mt19937_64 rng(seed);
    auto fill = [&](std::span<double> values, std::size_t fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> u(-bound, bound);
        for (double& v : values) v = u(rng);
    };
    const Offsets o = offsets(cfg);
    auto p = net.parameters();
    fill(p.subspan(o.w1, o.b1 - o.w1), cfg.input_width);
    fill(p.subspan(o.b1, o.w2 - o.b1), cfg.input_width);
    fill(p.subspan(o.w2, o.b2 - o.w2), cfg.hidden_width);
    fill(p.subspan(o.b2, o.total - o.b2), cfg.hidden_width);
    return net;
}

DenseLayerView Network::hidden_layer() {
    const Offsets o = offsets(config_);
    const auto H = static_cast<Index>(config_.hidden_width);
    return {Eigen::Map<MatrixXd>(params_.data() + o.w1, H, static_cast<Index>(config_.input_width)),
            Eigen::Map<VectorXd>(params_.data() + o.b1, H)};
}

DenseLayerView Network::output_layer() {
    const Offsets o = offsets(config_);
    const auto O = static_cast<Index>(config_.output_width);
    return {Eigen::Map<MatrixXd>(params_.data() + o.w2, O, static_cast<Index>(config_.hidden_width)),
            Eigen::Map<VectorXd>(params_.data() + o.b2, O)};
}

ConstDenseLayerView Network::hidden_layer() const {
    const Offsets o = offsets(config_);
    const auto H = static_cast<Index>(config_.hidden_width);
    return {Eigen::Map<const MatrixXd>(params_.data() + o.w1, H, static_cast<Index>(config_.input_width)),
            Eigen::Map<const VectorXd>(params_.data() + o.b1, H)};
}

ConstDenseLayerView Network::output_layer() const {
    const Offsets o = offsets(config_);
    const auto O = static_cast<Index>(config_.output_width);
    return {Eigen::Map<const MatrixXd>(params_.data() + o.w2, O, static_cast<Index>(config_.hidden_width)),
            Eigen::Map<const VectorXd>(params_.data() + o.b2, O)};
}

bool Network::all_finite() const {
    for (double v : params_)
        if (!std::isfinite(v)) return false;
    return true;
}

ForwardTrace simulate(const Network& net, const SpikeTrain& input, SpikeMode mode) {
    const NetworkConfig& cfg = net.config();
    if (input.channels() != cfg.input_width) {
        throw ShapeError("network expects " + std::to_string(cfg.input_width) + " input channels, got " +
                         std::to_string(input.channels()));
    }
    const auto N = static_cast<Index>(input.steps());
    const auto H = static_cast<Index>(cfg.hidden_width);
    const auto O = static_cast<Index>(cfg.output_width);
    const double beta = cfg.beta;
    const double theta = cfg.threshold;
    const double slope = cfg.surrogate_slope;
    const bool binary = mode == SpikeMode::heaviside;

    ForwardTrace tr;
    tr.mode = mode;
    tr.hidden_pre.resize(H, N);
    tr.hidden_spikes.resize(H, N);
    tr.output_pre.resize(O, N);
    tr.output_spikes.resize(O, N);

    const auto l1 = net.hidden_layer();
    const auto l2 = net.output_layer();
    LIFState state(cfg);
    VectorXd current1(H);
    VectorXd current2(O);

    for (Index n = 0; n < N; ++n) {
        current1 = l1.bias;
        const auto in = input.step(static_cast<std::size_t>(n));
        for (std::size_t c = 0; c < in.size(); ++c)
            if (in[c]) current1 += l1.weights.col(static_cast<Index>(c));

        state.hidden = beta * state.hidden + current1;
        tr.hidden_pre.col(n) = state.hidden;
        for (Index j = 0; j < H; ++j) {
            const double u = state.hidden[j];
            const double s = binary ? (u >= theta ? 1.0 : 0.0) : atan_spike(u - theta, slope);
            tr.hidden_spikes(j, n) = s;
            state.hidden[j] = u - s * theta;
        }

        current2 = l2.bias;
        if (binary) {
            for (Index j = 0; j < H; ++j)
                if (tr.hidden_spikes(j, n) != 0.0) current2 += l2.weights.col(j);
        } else {
            current2.noalias() += l2.weights * tr.hidden_spikes.col(n);
        }

        state.output = beta * state.output + current2;
        tr.output_pre.col(n) = state.output;
        for (Index k = 0; k < O; ++k) {
            const double u = state.output[k];
            const double s = binary ? (u >= theta ? 1.0 : 0.0) : atan_spike(u - theta, slope);
            tr.output_spikes(k, n) = s;
            state.output[k] = u - s * theta;
        }
    }
    return tr;
}

SpikeTrain output_spike_train(const ForwardTrace& trace, std::size_t time_steps, std::size_t exposure) {
    SpikeTrain out(static_cast<std::size_t>(trace.output_spikes.rows()), time_steps, exposure);
    if (static_cast<std::size_t>(trace.output_spikes.cols()) != out.steps()) {
        throw ShapeError("trace length does not match time_steps * exposure");
    }
    for (std::size_t n = 0; n < out.steps(); ++n) {
        auto step = out.step(n);
        for (std::size_t k = 0; k < step.size(); ++k) {
            step[k] = trace.output_spikes(static_cast<Index>(k), static_cast<Index>(n)) >= 0.5 ? 1 : 0;
        }
    }
    return out;
}

SpikeTrain forward(const Network& net, const SpikeTrain& input) {
    return output_spike_train(simulate(net, input, SpikeMode::heaviside), input.time_steps(), input.exposure());
}

MatrixXd continuous_relaxation_forward(const Network& net, const SpikeTrain& input) {
    return simulate(net, input, SpikeMode::relaxed).output_spikes;
}

void backward(const Network& net, const SpikeTrain& input, const ForwardTrace& trace, const MatrixXd& output_grad,
              Gradients& grads, double scale) {
    const NetworkConfig& cfg = net.config();
    const auto N = static_cast<Index>(input.steps());
    const auto H = static_cast<Index>(cfg.hidden_width);
    const auto O = static_cast<Index>(cfg.output_width);
    const auto In = static_cast<Index>(cfg.input_width);
    if (output_grad.rows() != O || output_grad.cols() != N || trace.output_pre.cols() != N) {
        throw ShapeError("backward: gradient/trace shape does not match the input");
    }
    if (grads.values.size() != net.parameter_count()) throw ShapeError("backward: gradient buffer size mismatch");

    const Offsets o = offsets(cfg);
    double* g = grads.values.data();
    Eigen::Map<MatrixXd> gw1(g + o.w1, H, In);
    Eigen::Map<VectorXd> gb1(g + o.b1, H);
    Eigen::Map<MatrixXd> gw2(g + o.w2, O, H);
    Eigen::Map<VectorXd> gb2(g + o.b2, O);
    const auto w2 = net.output_layer().weights;

    const double beta = cfg.beta;
    const double theta = cfg.threshold;
    const double slope = cfg.surrogate_slope;
    const bool detach = cfg.detach_reset;
    const bool binary = trace.mode == SpikeMode::heaviside;

    // carry_* is dLoss/d(post-reset membrane) flowing back from step n + 1.
    VectorXd carry1 = VectorXd::Zero(H);
    VectorXd carry2 = VectorXd::Zero(O);
    VectorXd delta1(H);
    VectorXd delta2(O);
    VectorXd spike_grad1(H);

    for (Index n = N - 1; n >= 0; --n) {
        for (Index k = 0; k < O; ++k) {
            const double sg = surrogate_grad(trace.output_pre(k, n) - theta, slope);
            const double through_reset = detach ? 1.0 : 1.0 - theta * sg;
            delta2[k] = output_grad(k, n) * sg + carry2[k] * through_reset;
        }
        gb2.noalias() += scale * delta2;
        if (binary) {
            for (Index j = 0; j < H; ++j)
                if (trace.hidden_spikes(j, n) != 0.0) gw2.col(j).noalias() += scale * delta2;
        } else {
            gw2.noalias() += scale * delta2 * trace.hidden_spikes.col(n).transpose();
        }

        spike_grad1.noalias() = w2.transpose() * delta2;
        for (Index j = 0; j < H; ++j) {
            const double sg = surrogate_grad(trace.hidden_pre(j, n) - theta, slope);
            const double through_reset = detach ? 1.0 : 1.0 - theta * sg;
            delta1[j] = spike_grad1[j] * sg + carry1[j] * through_reset;
        }
        gb1.noalias() += scale * delta1;
        const auto in = input.step(static_cast<std::size_t>(n));
        for (std::size_t c = 0; c < in.size(); ++c)
            if (in[c]) gw1.col(static_cast<Index>(c)).noalias() += scale * delta1;

        carry1 = beta * delta1;
        carry2 = beta * delta2;
    }
}

void save_checkpoint(const std::filesystem::path& path, const Network& net, const CheckpointInfo& info) {
    const auto& c = net.config();
    std::ostringstream out;
    out << kCheckpointMagic << '\n'
        << "model = " << info.model << '\n'
        << "input_width = " << c.input_width << '\n'
        << "hidden_width = " << c.hidden_width << '\n'
        << "output_width = " << c.output_width << '\n'
        << "beta = " << detail::format_double(c.beta) << '\n'
        << "threshold = " << detail::format_double(c.threshold) << '\n'
        << "surrogate_slope = " << detail::format_double(c.surrogate_slope) << '\n'
        << "encoding = " << info.encoding << '\n'
        << "exposure = " << info.exposure << '\n'
        << "seed = " << info.seed << '\n'
        << "epoch = " << info.epoch << '\n'
        << "train_seconds = " << detail::format_double(info.train_seconds) << '\n'
        << "parameters = " << net.parameter_count() << '\n'
        << "dtype = f64\nendianness = little\nend_header\n";
    std::string bytes = out.str();
    for (double v : net.parameters()) {
        const auto bits = std::bit_cast<std::uint64_t>(v);
        for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Network load_checkpoint(const std::filesystem::path& path, CheckpointInfo* info) {
    const std::string where = path.string();
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open checkpoint '" + where + "'");
    std::string first;
    std::getline(f, first);
    if (detail::trim(first) != kCheckpointMagic) throw FormatError(where + ": not a checkpoint");
    const auto kv = detail::read_kv(f, where, "end_header");
    auto get_size = [&](const char* key) {
        return static_cast<std::size_t>(detail::parse_int(detail::require_kv(kv, key, where), where));
    };
    auto get_double = [&](const char* key) { return detail::parse_double(detail::require_kv(kv, key, where), where); };

    NetworkConfig cfg;
    cfg.input_width = get_size("input_width");
    cfg.hidden_width = get_size("hidden_width");
    cfg.output_width = get_size("output_width");
    cfg.beta = get_double("beta");
    cfg.threshold = get_double("threshold");
    cfg.surrogate_slope = get_double("surrogate_slope");
    Network net(cfg);
    if (get_size("parameters") != net.parameter_count()) {
        throw FormatError(where + ": parameter count does not match the widths");
    }
    std::string blob((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (blob.size() != 8 * net.parameter_count()) {
        throw FormatError(where + ": truncated parameter blob");
    }
    auto params = net.parameters();
    const auto* p = reinterpret_cast<const unsigned char*>(blob.data());
    for (std::size_t i = 0; i < params.size(); ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(p[8 * i + b]) << (8 * b);
        params[i] = std::bit_cast<double>(bits);
    }
    if (info) {
        info->model = detail::require_kv(kv, "model", where);
        info->encoding = detail::require_kv(kv, "encoding", where);
        info->exposure = static_cast<int>(get_size("exposure"));
        info->seed = static_cast<std::uint64_t>(get_size("seed"));
        info->epoch = static_cast<int>(get_size("epoch"));
        info->train_seconds = get_double("train_seconds");
    }
    return net;
}

}  // namespace snnrfi
