#include "snnrfi/losses.hpp"

#include "snnrfi/errors.hpp"

namespace snnrfi {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;

void check_shape(const MatrixXd& y, std::size_t channels, std::size_t steps, const char* what) {
    if (static_cast<std::size_t>(y.rows()) != channels || static_cast<std::size_t>(y.cols()) != steps) {
        throw ShapeError(std::string(what) + ": output shape " + std::to_string(y.rows()) + "x" +
                         std::to_string(y.cols()) + " does not match target " + std::to_string(channels) + "x" +
                         std::to_string(steps));
    }
}

bool ignored(IgnoreMask ignore, std::size_t channel, std::size_t t) {
    return ignore && (*ignore)(channel % ignore->rows(), t) != 0;
}

}  // namespace

std::string_view to_string(LossKind k) {
    switch (k) {
        case LossKind::latency_mse: return "latency-mse";
        case LossKind::rate_count_mse: return "rate-count-mse";
        case LossKind::huber: return "huber";
        case LossKind::latency_time: return "latency-time";
    }
    return "unknown";
}

LossKind parse_loss_kind(std::string_view name) {
    for (auto k : {LossKind::latency_mse, LossKind::rate_count_mse, LossKind::huber, LossKind::latency_time})
        if (to_string(k) == name) return k;
    throw ConfigError("unknown loss kind '" + std::string(name) + "'");
}

void LossConfig::validate() const {
    if (!(huber_delta > 0.0)) throw ConfigError("huber delta must be positive");
}

LossConfig LossConfig::for_method(EncodingMethod m) {
    switch (m) {
        case EncodingMethod::rate: return {LossKind::rate_count_mse};
        case EncodingMethod::delta: return {LossKind::huber};
        default: return {LossKind::latency_mse};
    }
}

MatrixXd to_matrix(const SpikeTrain& train) {
    MatrixXd m(static_cast<Index>(train.channels()), static_cast<Index>(train.steps()));
    for (std::size_t n = 0; n < train.steps(); ++n) {
        const auto s = train.step(n);
        for (std::size_t c = 0; c < s.size(); ++c) m(static_cast<Index>(c), static_cast<Index>(n)) = s[c];
    }
    return m;
}

LossValue loss_latency(const MatrixXd& y, const SpikeTrain& target, IgnoreMask ignore) {
    check_shape(y, target.channels(), target.steps(), "latency loss");
    const std::size_t E = target.exposure();
    const double inv_t = 1.0 / static_cast<double>(target.time_steps());
    LossValue out{0.0, MatrixXd::Zero(y.rows(), y.cols())};
    for (std::size_t n = 0; n < target.steps(); ++n) {
        const auto f = target.step(n);
        for (std::size_t c = 0; c < target.channels(); ++c) {
            if (ignored(ignore, c, n / E)) continue;
            const auto r = static_cast<Index>(c);
            const auto k = static_cast<Index>(n);
            const double diff = y(r, k) - f[c];
            out.value += diff * diff * inv_t;
            out.grad(r, k) = 2.0 * diff * inv_t;
        }
    }
    return out;
}

LossValue loss_rate(const MatrixXd& y, const Grid<double>& target_counts, std::size_t exposure, IgnoreMask ignore) {
    const std::size_t C = target_counts.rows();
    const std::size_t T = target_counts.cols();
    check_shape(y, C, T * exposure, "rate loss");
    const double norm = 1.0 / static_cast<double>(C * T);
    LossValue out{0.0, MatrixXd::Zero(y.rows(), y.cols())};
    for (std::size_t c = 0; c < C; ++c) {
        const auto r = static_cast<Index>(c);
        for (std::size_t t = 0; t < T; ++t) {
            if (ignored(ignore, c, t)) continue;
            const auto first = static_cast<Index>(t * exposure);
            const auto width = static_cast<Index>(exposure);
            const double diff = y.row(r).segment(first, width).sum() - target_counts(c, t);
            out.value += diff * diff * norm;
            out.grad.row(r).segment(first, width).setConstant(2.0 * diff * norm);
        }
    }
    return out;
}

LossValue loss_huber(const MatrixXd& y, const SpikeTrain& target, double delta, IgnoreMask ignore) {
    check_shape(y, target.channels(), target.steps(), "huber loss");
    if (!(delta > 0.0)) throw ConfigError("huber delta must be positive");
    const std::size_t E = target.exposure();
    LossValue out{0.0, MatrixXd::Zero(y.rows(), y.cols())};
    for (std::size_t n = 0; n < target.steps(); ++n) {
        const auto f = target.step(n);
        for (std::size_t c = 0; c < target.channels(); ++c) {
            if (ignored(ignore, c, n / E)) continue;
            const auto r = static_cast<Index>(c);
            const auto k = static_cast<Index>(n);
            const double diff = y(r, k) - f[c];
            out.value += huber(diff, delta);
            out.grad(r, k) = huber_grad(diff, delta);
        }
    }
    return out;
}

LossValue loss_latency_time(const MatrixXd& y, const SpikeTrain& target, IgnoreMask ignore) {
    check_shape(y, target.channels(), target.steps(), "latency-time loss");
    const std::size_t E = target.exposure();
    const double last = static_cast<double>(E - 1);
    const double inv_t = 1.0 / static_cast<double>(target.time_steps());
    LossValue out{0.0, MatrixXd::Zero(y.rows(), y.cols())};
    for (std::size_t c = 0; c < target.channels(); ++c) {
        const auto r = static_cast<Index>(c);
        for (std::size_t t = 0; t < target.time_steps(); ++t) {
            if (ignored(ignore, c, t)) continue;
            double tau = last;
            double target_time = last;
            bool found = false;
            for (std::size_t e = 0; e < E; ++e) {
                const double v = y(r, static_cast<Index>(t * E + e));
                tau += (static_cast<double>(e) - last) * v;
                if (!found && target.at(c, t, e)) {
                    target_time = static_cast<double>(e);
                    found = true;
                }
            }
            const double diff = tau - target_time;
            out.value += diff * diff * inv_t;
            for (std::size_t e = 0; e < E; ++e) {
                out.grad(r, static_cast<Index>(t * E + e)) = 2.0 * diff * (static_cast<double>(e) - last) * inv_t;
            }
        }
    }
    return out;
}

LossValue compute_loss(const LossConfig& cfg, const MatrixXd& y, const Target& target, std::size_t exposure,
                       IgnoreMask ignore) {
    switch (cfg.kind) {
        case LossKind::latency_mse: return loss_latency(y, target.spikes, ignore);
        case LossKind::rate_count_mse: return loss_rate(y, target.counts, exposure, ignore);
        case LossKind::huber: return loss_huber(y, target.spikes, cfg.huber_delta, ignore);
        case LossKind::latency_time: return loss_latency_time(y, target.spikes, ignore);
    }
    throw ConfigError("unknown loss kind");
}

double batch_loss(const LossConfig& cfg, std::span<const MatrixXd> outputs, std::span<const Target> targets,
                  std::size_t exposure) {
    if (outputs.size() != targets.size()) throw ShapeError("batch_loss: outputs and targets differ in length");
    if (outputs.empty()) throw std::invalid_argument("batch_loss: empty batch");
    double sum = 0.0;
    for (std::size_t i = 0; i < outputs.size(); ++i) sum += compute_loss(cfg, outputs[i], targets[i], exposure).value;
    return sum / static_cast<double>(outputs.size());
}

double loss_latency(const SpikeTrain& y, const SpikeTrain& target) { return loss_latency(to_matrix(y), target).value; }

double loss_rate(const SpikeTrain& y, const Grid<double>& target_counts) {
    return loss_rate(to_matrix(y), target_counts, y.exposure()).value;
}

double loss_huber(const SpikeTrain& y, const SpikeTrain& target, double delta) {
    return loss_huber(to_matrix(y), target, delta).value;
}

}  // namespace snnrfi
