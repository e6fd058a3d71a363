#include "snnrfi/encoding.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "snnrfi/errors.hpp"

namespace snnrfi {
namespace {

void require_unit_interval(float x) {
    if (!(x >= 0.0f && x <= 1.0f)) throw DataError("encoder input must lie in [0, 1]");
}

void require_latency_exposure(int exposure) {
    if (exposure < 2) throw ConfigError("latency-style coding needs exposure >= 2 to keep a background slot");
}

}  // namespace

SpikeTrain::SpikeTrain(std::size_t channels, std::size_t time_steps, std::size_t exposure)
    : channels_(channels), time_steps_(time_steps), exposure_(exposure), data_(channels * time_steps * exposure, 0) {
    if (exposure == 0) throw ConfigError("spike train exposure must be >= 1");
}

std::size_t SpikeTrain::count() const noexcept {
    return static_cast<std::size_t>(std::accumulate(data_.begin(), data_.end(), std::size_t{0}));
}

std::size_t SpikeTrain::count(std::size_t c, std::size_t t) const {
    std::size_t n = 0;
    for (std::size_t e = 0; e < exposure_; ++e) n += at(c, t, e);
    return n;
}

std::string_view to_string(EncodingMethod m) {
    switch (m) {
        case EncodingMethod::latency: return "latency";
        case EncodingMethod::rate: return "rate";
        case EncodingMethod::delta: return "delta";
        case EncodingMethod::sf_first: return "sf-first";
        case EncodingMethod::sf_direct: return "sf-direct";
        case EncodingMethod::sf_latency: return "sf-latency";
    }
    return "unknown";
}

EncodingMethod parse_encoding_method(std::string_view name) {
    for (auto m : all_encoding_methods())
        if (to_string(m) == name) return m;
    throw ConfigError("unknown encoding method '" + std::string(name) + "'");
}

std::vector<EncodingMethod> all_encoding_methods() {
    return {EncodingMethod::latency,  EncodingMethod::rate,      EncodingMethod::delta,
            EncodingMethod::sf_first, EncodingMethod::sf_direct, EncodingMethod::sf_latency};
}

bool is_step_forward(EncodingMethod m) {
    return m == EncodingMethod::sf_first || m == EncodingMethod::sf_direct || m == EncodingMethod::sf_latency;
}

StepForwardMode step_forward_mode(EncodingMethod m) {
    switch (m) {
        case EncodingMethod::sf_first: return StepForwardMode::first;
        case EncodingMethod::sf_direct: return StepForwardMode::direct;
        case EncodingMethod::sf_latency: return StepForwardMode::latency;
        default: throw ConfigError("not a step-forward method: " + std::string(to_string(m)));
    }
}

void EncodingConfig::validate() const {
    if (exposure < 1 || exposure > 64) throw ConfigError("exposure must lie in [1, 64]");
    if (method == EncodingMethod::latency || method == EncodingMethod::sf_first ||
        method == EncodingMethod::sf_latency) {
        require_latency_exposure(exposure);
    }
    for (double th : {sf_threshold, delta_threshold, rate_high, rate_low, rate_decode_threshold}) {
        if (!(th > 0.0 && th < 1.0)) throw ConfigError("encoding thresholds and rates must lie in (0, 1)");
    }
    if (!(rate_low < rate_high)) throw ConfigError("rate_low must be below rate_high");
}

std::size_t input_width(EncodingMethod m, std::size_t freq) {
    return (m == EncodingMethod::delta || is_step_forward(m)) ? 2 * freq : freq;
}

std::size_t output_width(EncodingMethod m, std::size_t freq) {
    return m == EncodingMethod::delta ? 2 * freq : freq;
}

// -- latency -----------------------------------------------------------------

std::size_t latency_slot(double x, int exposure) {
    require_latency_exposure(exposure);
    const double slot = std::round((1.0 - x) * static_cast<double>(exposure - 1));
    return static_cast<std::size_t>(std::clamp(slot, 0.0, static_cast<double>(exposure - 1)));
}

SpikeTrain encode_latency(const Grid<float>& values, int exposure) {
    require_latency_exposure(exposure);
    SpikeTrain out(values.rows(), values.cols(), static_cast<std::size_t>(exposure));
    for (std::size_t c = 0; c < values.rows(); ++c) {
        for (std::size_t t = 0; t < values.cols(); ++t) {
            require_unit_interval(values(c, t));
            out.set(c, t, latency_slot(values(c, t), exposure));
        }
    }
    return out;
}

SpikeTrain encode_target_latency(const Grid<std::uint8_t>& mask, int exposure) {
    require_latency_exposure(exposure);
    const std::size_t last = static_cast<std::size_t>(exposure - 1);
    SpikeTrain out(mask.rows(), mask.cols(), static_cast<std::size_t>(exposure));
    for (std::size_t c = 0; c < mask.rows(); ++c)
        for (std::size_t t = 0; t < mask.cols(); ++t) out.set(c, t, mask(c, t) ? 0 : last);
    return out;
}

Decoded decode_latency(const SpikeTrain& output) {
    const std::size_t E = output.exposure();
    Decoded d{Grid<std::uint8_t>(output.channels(), output.time_steps(), 0),
              Grid<double>(output.channels(), output.time_steps(), 0.0)};
    for (std::size_t c = 0; c < output.channels(); ++c) {
        for (std::size_t t = 0; t < output.time_steps(); ++t) {
            for (std::size_t e = 0; e < E; ++e) {
                if (!output.at(c, t, e)) continue;
                d.flags(c, t) = e + 1 < E ? 1 : 0;
                d.scores(c, t) = E > 1 ? static_cast<double>(E - 1 - e) / static_cast<double>(E - 1) : 0.0;
                break;
            }
        }
    }
    return d;
}

// -- rate --------------------------------------------------------------------

SpikeTrain encode_rate(const Grid<float>& values, int exposure, std::uint64_t seed) {
    if (exposure < 1) throw ConfigError("rate coding needs exposure >= 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SpikeTrain out(values.rows(), values.cols(), static_cast<std::size_t>(exposure));
    for (std::size_t c = 0; c < values.rows(); ++c) {
        for (std::size_t t = 0; t < values.cols(); ++t) {
            const float x = values(c, t);
            require_unit_interval(x);
            for (int e = 0; e < exposure; ++e) {
                if (u(rng) < x) out.set(c, t, static_cast<std::size_t>(e));
            }
        }
    }
    return out;
}

Grid<double> encode_target_rate(const Grid<std::uint8_t>& mask, int exposure, double high, double low) {
    if (exposure < 1) throw ConfigError("rate coding needs exposure >= 1");
    Grid<double> counts(mask.rows(), mask.cols(), 0.0);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        counts.data()[i] = (mask.data()[i] ? high : low) * static_cast<double>(exposure);
    }
    return counts;
}

Decoded decode_rate(const SpikeTrain& output, double threshold) {
    const double E = static_cast<double>(output.exposure());
    Decoded d{Grid<std::uint8_t>(output.channels(), output.time_steps(), 0),
              Grid<double>(output.channels(), output.time_steps(), 0.0)};
    for (std::size_t c = 0; c < output.channels(); ++c) {
        for (std::size_t t = 0; t < output.time_steps(); ++t) {
            const double n = static_cast<double>(output.count(c, t));
            d.flags(c, t) = n > threshold * E ? 1 : 0;
            d.scores(c, t) = n / E;
        }
    }
    return d;
}

// -- delta modulation ----------------------------------------------------------

SpikeTrain encode_delta(const Grid<float>& values, double threshold) {
    const std::size_t F = values.rows();
    SpikeTrain out(2 * F, values.cols(), 1);
    for (std::size_t c = 0; c < F; ++c) {
        double previous = 0.0;
        for (std::size_t t = 0; t < values.cols(); ++t) {
            const double x = values(c, t);
            if (!std::isfinite(x)) throw DataError("delta encoder input must be finite");
            const double diff = x - previous;
            if (diff >= threshold) {
                out.set(c, t, 0);
            } else if (diff <= -threshold) {
                out.set(F + c, t, 0);
            }
            previous = x;
        }
    }
    return out;
}

SpikeTrain encode_target_delta(const Grid<std::uint8_t>& mask) {
    const std::size_t F = mask.rows();
    SpikeTrain out(2 * F, mask.cols(), 1);
    for (std::size_t c = 0; c < F; ++c) {
        bool previous = false;
        for (std::size_t t = 0; t < mask.cols(); ++t) {
            const bool now = mask(c, t) != 0;
            if (now && !previous) out.set(c, t, 0);
            if (!now && previous) out.set(F + c, t, 0);
            previous = now;
        }
    }
    return out;
}

Decoded decode_delta(const SpikeTrain& output) {
    if (output.channels() % 2 != 0) throw ShapeError("delta decoding needs an even number of output channels");
    const std::size_t F = output.channels() / 2;
    Decoded d{Grid<std::uint8_t>(F, output.time_steps(), 0), Grid<double>(F, output.time_steps(), 0.0)};
    for (std::size_t c = 0; c < F; ++c) {
        bool latch = false;
        for (std::size_t t = 0; t < output.time_steps(); ++t) {
            bool on = false;
            bool off = false;
            for (std::size_t e = 0; e < output.exposure(); ++e) {
                on = on || output.at(c, t, e);
                off = off || output.at(F + c, t, e);
            }
            if (on) latch = true;
            if (off) latch = false;
            d.flags(c, t) = latch ? 1 : 0;
            d.scores(c, t) = latch ? 1.0 : 0.0;
        }
    }
    return d;
}

// -- step forward ------------------------------------------------------------

std::vector<int> step_forward_trace(std::span<const double> signal, double threshold, double* final_base) {
    std::vector<int> trace(signal.size(), 0);
    double base = 0.0;
    for (std::size_t t = 0; t < signal.size(); ++t) {
        if (signal[t] > base + threshold) {
            trace[t] = 1;
            base += threshold;
        } else if (signal[t] < base - threshold) {
            trace[t] = -1;
            base -= threshold;
        }
    }
    if (final_base) *final_base = base;
    return trace;
}

SpikeTrain encode_step_forward(const Grid<float>& values, double threshold, StepForwardMode mode, int exposure) {
    if (mode == StepForwardMode::direct) {
        if (exposure < 1) throw ConfigError("step-forward needs exposure >= 1");
    } else {
        require_latency_exposure(exposure);
    }
    const std::size_t F = values.rows();
    const std::size_t T = values.cols();
    const std::size_t E = static_cast<std::size_t>(exposure);
    SpikeTrain out(2 * F, T, E);
    std::vector<double> signal(T);
    for (std::size_t c = 0; c < F; ++c) {
        for (std::size_t t = 0; t < T; ++t) {
            require_unit_interval(values(c, t));
            signal[t] = values(c, t);
        }
        const auto trace = step_forward_trace(signal, threshold);
        for (std::size_t t = 0; t < T; ++t) {
            for (std::size_t half = 0; half < 2; ++half) {
                const std::size_t ch = half * F + c;
                const bool spike = half == 0 ? trace[t] > 0 : trace[t] < 0;
                switch (mode) {
                    case StepForwardMode::first:
                        if (spike) out.set(ch, t, 0);
                        break;
                    case StepForwardMode::direct:
                        if (spike)
                            for (std::size_t e = 0; e < E; ++e) out.set(ch, t, e);
                        break;
                    case StepForwardMode::latency:
                        out.set(ch, t, spike ? 0 : E - 1);
                        break;
                }
            }
        }
    }
    return out;
}

Decoded decode_step_forward(const SpikeTrain& output) { return decode_latency(output); }

// -- dispatch ----------------------------------------------------------------

SpikeTrain encode_input(const Grid<float>& values, const EncodingConfig& cfg, std::uint64_t stream) {
    switch (cfg.method) {
        case EncodingMethod::latency: return encode_latency(values, cfg.exposure);
        case EncodingMethod::rate: {
            std::seed_seq seq{cfg.rng_seed, stream};
            std::array<std::uint32_t, 2> words{};
            seq.generate(words.begin(), words.end());
            return encode_rate(values, cfg.exposure, (std::uint64_t{words[0]} << 32) | words[1]);
        }
        case EncodingMethod::delta: return encode_delta(values, cfg.delta_threshold);
        case EncodingMethod::sf_first:
        case EncodingMethod::sf_direct:
        case EncodingMethod::sf_latency:
            return encode_step_forward(values, cfg.sf_threshold, step_forward_mode(cfg.method), cfg.exposure);
    }
    throw ConfigError("unknown encoding method");
}

Target encode_target(const Grid<std::uint8_t>& mask, const EncodingConfig& cfg) {
    Target target;
    switch (cfg.method) {
        case EncodingMethod::rate:
            target.counts = encode_target_rate(mask, cfg.exposure, cfg.rate_high, cfg.rate_low);
            break;
        case EncodingMethod::delta: target.spikes = encode_target_delta(mask); break;
        default: target.spikes = encode_target_latency(mask, cfg.exposure); break;
    }
    return target;
}

Decoded decode_output(const SpikeTrain& output, const EncodingConfig& cfg) {
    switch (cfg.method) {
        case EncodingMethod::rate: return decode_rate(output, cfg.rate_decode_threshold);
        case EncodingMethod::delta: return decode_delta(output);
        default: return decode_latency(output);
    }
}

Grid<std::uint8_t> raster_image(const SpikeTrain& train) {
    Grid<std::uint8_t> img(train.channels(), train.steps(), 0);
    for (std::size_t n = 0; n < train.steps(); ++n) {
        const auto s = train.step(n);
        for (std::size_t c = 0; c < train.channels(); ++c) img(c, n) = s[c] ? 255 : 0;
    }
    return img;
}

void write_raster_pgm(const std::filesystem::path& path, const SpikeTrain& train) {
    const auto img = raster_image(train);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << "P5\n" << img.cols() << ' ' << img.rows() << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data().data()), static_cast<std::streamsize>(img.size()));
}

}  // namespace snnrfi
