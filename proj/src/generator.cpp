#include "snnrfi/generator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "kv_text.hpp"
#include "snnrfi/errors.hpp"

namespace snnrfi {
namespace {

using Rng = std::mt19937_64;

std::size_t uniform_index(Rng& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

/// Adds `amp` to every pixel of the rectangle and flags it.
void inject(Grid<double>& rfi, RFIMask& mask, std::size_t f0, std::size_t f1, std::size_t t0, std::size_t t1,
            double amp, Rng& rng) {
    std::uniform_real_distribution<double> jitter(0.85, 1.15);
    for (std::size_t f = f0; f < f1; ++f) {
        for (std::size_t t = t0; t < t1; ++t) {
            rfi(f, t) += amp * jitter(rng);
            mask.flags(f, t) = 1;
        }
    }
}

LabelledSpectrogram make_one(const GeneratorConfig& cfg, double scale, std::uint64_t split, std::uint64_t index) {
    std::seed_seq seq{cfg.seed, split, index};
    Rng rng(seq);
    const std::size_t F = cfg.freq_channels;
    const std::size_t T = cfg.time_steps;

    LabelledSpectrogram out;
    out.spectrogram.values = Grid<float>(F, T, 0.0f);
    out.spectrogram.baseline_id = static_cast<std::int64_t>(index);
    out.mask.flags = Grid<std::uint8_t>(F, T, 0);

    const auto [bg_lo, bg_hi] = cfg.background_gradient_range;
    std::uniform_real_distribution<double> level(bg_lo, bg_hi);
    const double at_low_freq = level(rng);
    const double at_high_freq = level(rng);
    const double time_slope = std::uniform_real_distribution<double>(-0.1, 0.1)(rng) * (bg_hi - bg_lo);
    std::normal_distribution<double> noise(0.0, cfg.noise_sigma);
    std::lognormal_distribution<double> amplitude(std::log(cfg.amplitude_median), cfg.amplitude_log_sigma);

    Grid<double> rfi(F, T, 0.0);
    auto count = [&](double rate) {
        const double mean = rate * scale;
        return mean > 0.0 ? std::poisson_distribution<int>(mean)(rng) : 0;
    };

    const auto& rates = cfg.rfi_rates;
    for (int n = count(rates.narrowband_persistent); n > 0; --n) {
        const std::size_t width = uniform_index(rng, 1, std::min<std::size_t>(3, F));
        const std::size_t f0 = uniform_index(rng, 0, F - width);
        inject(rfi, out.mask, f0, f0 + width, 0, T, amplitude(rng), rng);
    }
    for (int n = count(rates.broadband_transient); n > 0; --n) {
        const std::size_t width = uniform_index(rng, 1, std::min<std::size_t>(2, T));
        const std::size_t t0 = uniform_index(rng, 0, T - width);
        inject(rfi, out.mask, 0, F, t0, t0 + width, amplitude(rng), rng);
    }
    for (int n = count(rates.narrowband_transient); n > 0; --n) {
        const std::size_t width = uniform_index(rng, 1, std::min<std::size_t>(4, F));
        const std::size_t duration = uniform_index(rng, std::max<std::size_t>(1, T / 16), std::max<std::size_t>(1, T / 2));
        const std::size_t f0 = uniform_index(rng, 0, F - width);
        const std::size_t t0 = uniform_index(rng, 0, T - duration);
        inject(rfi, out.mask, f0, f0 + width, t0, t0 + duration, amplitude(rng), rng);
    }
    for (int n = count(rates.blip); n > 0; --n) {
        const std::size_t h = uniform_index(rng, 1, std::min<std::size_t>(3, F));
        const std::size_t w = uniform_index(rng, 1, std::min<std::size_t>(3, T));
        const std::size_t f0 = uniform_index(rng, 0, F - h);
        const std::size_t t0 = uniform_index(rng, 0, T - w);
        inject(rfi, out.mask, f0, f0 + h, t0, t0 + w, amplitude(rng), rng);
    }

    for (std::size_t f = 0; f < F; ++f) {
        const double ff = F > 1 ? static_cast<double>(f) / static_cast<double>(F - 1) : 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            const double tt = T > 1 ? static_cast<double>(t) / static_cast<double>(T - 1) : 0.0;
            const double background = at_low_freq + (at_high_freq - at_low_freq) * ff + time_slope * tt;
            const double v = std::abs(background + noise(rng)) + rfi(f, t);
            out.spectrogram.values(f, t) = static_cast<float>(v);
        }
    }
    return out;
}

std::map<std::string, std::string> describe(const GeneratorConfig& cfg) {
    using detail::format_double;
    return {
        {"n_train", std::to_string(cfg.n_train)},
        {"n_test", std::to_string(cfg.n_test)},
        {"freq_channels", std::to_string(cfg.freq_channels)},
        {"time_steps", std::to_string(cfg.time_steps)},
        {"background_gradient_range",
         format_double(cfg.background_gradient_range.first) + " " + format_double(cfg.background_gradient_range.second)},
        {"noise_sigma", format_double(cfg.noise_sigma)},
        {"rate.narrowband_persistent", format_double(cfg.rfi_rates.narrowband_persistent)},
        {"rate.broadband_transient", format_double(cfg.rfi_rates.broadband_transient)},
        {"rate.narrowband_transient", format_double(cfg.rfi_rates.narrowband_transient)},
        {"rate.blip", format_double(cfg.rfi_rates.blip)},
        {"amplitude_median", format_double(cfg.amplitude_median)},
        {"amplitude_log_sigma", format_double(cfg.amplitude_log_sigma)},
        {"target_contamination", format_double(cfg.target_contamination)},
        {"contamination_tolerance", format_double(cfg.contamination_tolerance)},
    };
}

}  // namespace

void GeneratorConfig::validate() const {
    if (n_train + n_test == 0) throw ConfigError("generator: n_train + n_test must be at least 1");
    if (freq_channels == 0 || time_steps == 0) throw ConfigError("generator: spectrogram shape must be non-empty");
    if (!(target_contamination > 0.0 && target_contamination <= 0.2)) {
        throw ConfigError("generator: target_contamination must lie in (0, 0.2]");
    }
    if (!(contamination_tolerance > 0.0)) throw ConfigError("generator: contamination_tolerance must be positive");
    const auto& r = rfi_rates;
    for (double v : {r.narrowband_persistent, r.broadband_transient, r.narrowband_transient, r.blip}) {
        if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("generator: RFI event rates must be >= 0");
    }
    if (!(background_gradient_range.first >= 0.0 && background_gradient_range.second >= background_gradient_range.first)) {
        throw ConfigError("generator: background_gradient_range must be a non-negative ordered pair");
    }
    if (!(noise_sigma >= 0.0)) throw ConfigError("generator: noise_sigma must be >= 0");
    if (!(amplitude_median > 0.0) || !(amplitude_log_sigma >= 0.0)) {
        throw ConfigError("generator: amplitude parameters must be positive");
    }
    if (max_retries < 1) throw ConfigError("generator: max_retries must be >= 1");
}

Dataset generate_dataset(const GeneratorConfig& cfg) {
    cfg.validate();
    auto build = [&](double scale) {
        Dataset ds;
        for (std::size_t i = 0; i < cfg.n_train; ++i) ds.train.push_back(make_one(cfg, scale, 0, i));
        for (std::size_t i = 0; i < cfg.n_test; ++i) ds.test.push_back(make_one(cfg, scale, 1, i));
        return ds;
    };

    Dataset best;
    double best_error = std::numeric_limits<double>::infinity();
    if (cfg.rfi_rates.all_zero()) {
        best = build(1.0);
        best_error = 0.0;
    } else {
        double scale = 1.0;
        for (int attempt = 0; attempt < cfg.max_retries; ++attempt) {
            Dataset ds = build(scale);
            const double measured = contamination_stats(ds);
            const double error = std::abs(measured - cfg.target_contamination);
            if (error < best_error) {
                best_error = error;
                best = std::move(ds);
            }
            if (best_error <= 0.1 * cfg.contamination_tolerance) break;
            scale *= measured > 0.0 ? cfg.target_contamination / measured : 2.0;
        }
        if (best_error > cfg.contamination_tolerance) {
            std::ostringstream msg;
            msg << "generator: could not reach contamination " << cfg.target_contamination << " +/- "
                << cfg.contamination_tolerance << " within " << cfg.max_retries << " attempts (closest error "
                << best_error << ")";
            throw GenerationError(msg.str());
        }
    }

    best.manifest.generator_seed = cfg.seed;
    best.manifest.generator_config = describe(cfg);
    best.manifest.contamination_fraction = contamination_stats(best);
    return best;
}

DatasetManifest generate_synthetic(const GeneratorConfig& cfg, const std::filesystem::path& out_dir) {
    Dataset ds = generate_dataset(cfg);
    save_dataset(out_dir, ds);
    return ds.manifest;
}

}  // namespace snnrfi
