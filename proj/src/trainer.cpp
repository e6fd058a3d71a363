#include "snnrfi/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "kv_text.hpp"
#include "snnrfi/errors.hpp"
#include "snnrfi/optim.hpp"

namespace snnrfi {
namespace {

double sample_loss(const Network& net, const EncodedSample& s, const LossConfig& loss, std::size_t exposure,
                   Gradients* grads, double scale) {
    const ForwardTrace trace = simulate(net, s.input, SpikeMode::heaviside);
    const IgnoreMask ignore = s.ignore.empty() ? nullptr : &s.ignore;
    const LossValue lv = compute_loss(loss, trace.output_spikes, s.target, exposure, ignore);
    if (grads) backward(net, s.input, trace, lv.grad, *grads, scale);
    return lv.value;
}

}  // namespace

void TrainingConfig::validate() const {
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (!(initial_lr > 0.0)) throw ConfigError("initial_lr must be positive");
    if (lr_patience < 1 || stop_patience < 1) throw ConfigError("patience values must be >= 1");
    if (!(lr_factor > 0.0 && lr_factor < 1.0)) throw ConfigError("lr_factor must lie in (0, 1)");
    if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
        throw ConfigError("validation_fraction must lie in [0, 1)");
    }
}

TrainingHistory fit(Network& net, std::size_t n_samples, const TrainingConfig& cfg, const SampleObjective& objective) {
    cfg.validate();
    if (n_samples == 0) throw std::invalid_argument("fit: no training samples");
    const auto started = std::chrono::steady_clock::now();

    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(n_samples);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    const auto n_val = static_cast<std::size_t>(std::floor(cfg.validation_fraction * static_cast<double>(n_samples)));
    std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());

    AdamState adam(net.parameter_count());
    Gradients grads(net);
    ReduceOnPlateau scheduler(cfg.initial_lr, cfg.lr_patience, cfg.lr_factor, cfg.min_delta);
    EarlyStopping stopper(cfg.stop_patience, cfg.min_delta);
    std::vector<double> best_params(net.parameters().begin(), net.parameters().end());

    TrainingHistory history;
    const auto batch = static_cast<std::size_t>(cfg.batch_size);
    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::shuffle(train_idx.begin(), train_idx.end(), rng);
        const double lr = scheduler.lr();
        double train_sum = 0.0;
        std::size_t batch_no = 0;
        for (std::size_t start = 0; start < train_idx.size(); start += batch, ++batch_no) {
            const std::size_t end = std::min(train_idx.size(), start + batch);
            const double scale = 1.0 / static_cast<double>(end - start);
            grads.zero();
            double batch_sum = 0.0;
            for (std::size_t i = start; i < end; ++i) batch_sum += objective(train_idx[i], &grads, scale);
            if (!std::isfinite(batch_sum)) {
                std::ostringstream msg;
                msg << "non-finite loss at epoch " << epoch << ", batch " << batch_no << ", lr " << lr;
                throw TrainingError(msg.str());
            }
            train_sum += batch_sum;
            adam_step(net.parameters(), grads.values, adam, lr);
        }
        if (!net.all_finite()) {
            std::ostringstream msg;
            msg << "non-finite parameters after epoch " << epoch << ", lr " << lr;
            throw TrainingError(msg.str());
        }

        EpochRecord rec{epoch, train_sum / static_cast<double>(train_idx.size()), 0.0, lr};
        if (val.empty()) {
            // Loss of the updated parameters, comparable across epochs.
            double sum = 0.0;
            for (std::size_t i : train_idx) sum += objective(i, nullptr, 1.0);
            rec.val_loss = sum / static_cast<double>(train_idx.size());
        } else {
            double sum = 0.0;
            for (std::size_t i : val) sum += objective(i, nullptr, 1.0);
            rec.val_loss = sum / static_cast<double>(val.size());
        }
        if (!std::isfinite(rec.val_loss)) {
            std::ostringstream msg;
            msg << "non-finite validation loss at epoch " << epoch << ", lr " << lr;
            throw TrainingError(msg.str());
        }
        history.epochs.push_back(rec);

        const bool stop = stopper.observe(rec.val_loss);
        if (stopper.improved()) {
            history.best_epoch = epoch;
            std::copy(net.parameters().begin(), net.parameters().end(), best_params.begin());
        }
        scheduler.observe(rec.val_loss);
        if (stop) {
            history.stopped_early = epoch < cfg.max_epochs;
            break;
        }
    }
    std::copy(best_params.begin(), best_params.end(), net.parameters().begin());
    history.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return history;
}

TrainingHistory train(Network& net, std::span<const EncodedSample> samples, const TrainingConfig& cfg,
                      const LossConfig& loss, std::size_t exposure) {
    loss.validate();
    for (const auto& s : samples) {
        if (s.input.channels() != net.config().input_width) {
            throw ShapeError("train: sample width " + std::to_string(s.input.channels()) +
                             " does not match network input width " + std::to_string(net.config().input_width));
        }
    }
    return fit(net, samples.size(), cfg, [&](std::size_t i, Gradients* g, double scale) {
        return sample_loss(net, samples[i], loss, exposure, g, scale);
    });
}

double bptt_grads(const Network& net, std::span<const EncodedSample> samples, std::span<const std::size_t> batch,
                  const LossConfig& loss, std::size_t exposure, Gradients& grads) {
    if (batch.empty()) throw std::invalid_argument("bptt_grads: empty batch");
    const double scale = 1.0 / static_cast<double>(batch.size());
    double sum = 0.0;
    for (std::size_t i : batch) sum += sample_loss(net, samples[i], loss, exposure, &grads, scale);
    return sum * scale;
}

double mean_loss(const Network& net, std::span<const EncodedSample> samples, const LossConfig& loss,
                 std::size_t exposure) {
    if (samples.empty()) throw std::invalid_argument("mean_loss: no samples");
    double sum = 0.0;
    for (const auto& s : samples) sum += sample_loss(net, s, loss, exposure, nullptr, 1.0);
    return sum / static_cast<double>(samples.size());
}

void write_history_csv(const std::filesystem::path& path, const TrainingHistory& history) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << "epoch,train_loss,val_loss,lr\n";
    for (const auto& e : history.epochs) {
        out << e.epoch << ',' << detail::format_double(e.train_loss) << ',' << detail::format_double(e.val_loss) << ','
            << detail::format_double(e.lr) << '\n';
    }
}

}  // namespace snnrfi
