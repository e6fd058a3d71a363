#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "snnrfi/grid.hpp"

namespace snnrfi {

/// Binary spike tensor of logical shape [channels x time_steps x exposure].
/// Stored step-major so that global step n = t * exposure + e is a contiguous
/// slice over channels, which is how the network consumes it.
class SpikeTrain {
  public:
    SpikeTrain() = default;
    SpikeTrain(std::size_t channels, std::size_t time_steps, std::size_t exposure);

    std::size_t channels() const noexcept { return channels_; }
    std::size_t time_steps() const noexcept { return time_steps_; }
    std::size_t exposure() const noexcept { return exposure_; }
    /// Total simulation steps, time_steps * exposure.
    std::size_t steps() const noexcept { return time_steps_ * exposure_; }

    std::uint8_t at(std::size_t c, std::size_t t, std::size_t e) const {
        return data_[(t * exposure_ + e) * channels_ + c];
    }
    void set(std::size_t c, std::size_t t, std::size_t e, bool spike = true) {
        data_[(t * exposure_ + e) * channels_ + c] = spike ? 1 : 0;
    }

    std::span<const std::uint8_t> step(std::size_t n) const { return {data_.data() + n * channels_, channels_}; }
    std::span<std::uint8_t> step(std::size_t n) { return {data_.data() + n * channels_, channels_}; }

    std::size_t count() const noexcept;
    /// Spikes of channel c within original time step t.
    std::size_t count(std::size_t c, std::size_t t) const;

    const std::vector<std::uint8_t>& data() const noexcept { return data_; }

    friend bool operator==(const SpikeTrain&, const SpikeTrain&) = default;

  private:
    std::size_t channels_ = 0;
    std::size_t time_steps_ = 0;
    std::size_t exposure_ = 0;
    std::vector<std::uint8_t> data_;
};

enum class EncodingMethod { latency, rate, delta, sf_first, sf_direct, sf_latency };
enum class StepForwardMode { first, direct, latency };

std::string_view to_string(EncodingMethod m);
/// Accepts "latency", "rate", "delta", "sf-first", "sf-direct", "sf-latency".
EncodingMethod parse_encoding_method(std::string_view name);
std::vector<EncodingMethod> all_encoding_methods();

bool is_step_forward(EncodingMethod m);
StepForwardMode step_forward_mode(EncodingMethod m);

struct EncodingConfig {
    EncodingMethod method = EncodingMethod::latency;
    int exposure = 6;
    double sf_threshold = 0.1;
    double delta_threshold = 0.1;
    double rate_high = 0.8;
    double rate_low = 0.2;
    double rate_decode_threshold = 0.75;
    std::uint64_t rng_seed = 0;

    /// Exposure actually used: 1 for delta-modulation, `exposure` otherwise.
    int effective_exposure() const noexcept { return method == EncodingMethod::delta ? 1 : exposure; }
    /// Throws ConfigError on out-of-range values (exposure in [1, 64] and at
    /// least 2 where decoding needs a background slot, thresholds in (0, 1)).
    void validate() const;
};

/// Network widths for `freq` frequency channels per patch.
std::size_t input_width(EncodingMethod m, std::size_t freq);
std::size_t output_width(EncodingMethod m, std::size_t freq);

/// Predicted flags and per-pixel scores, both [channels x time_steps].
struct Decoded {
    Grid<std::uint8_t> flags;
    Grid<double> scores;
};

/// Supervised target: spike trains for latency-style and delta losses,
/// per-(channel, time step) spike counts for the rate loss.
struct Target {
    SpikeTrain spikes;
    Grid<double> counts;
};

// -- latency -----------------------------------------------------------------

/// Exposure slot of a latency spike: round((1 - x) * (E - 1)).
std::size_t latency_slot(double x, int exposure);
SpikeTrain encode_latency(const Grid<float>& values, int exposure);
/// RFI pixels target slot 0, background targets the final slot E - 1.
SpikeTrain encode_target_latency(const Grid<std::uint8_t>& mask, int exposure);
/// Flag iff the first spike comes before the final slot. Score is the
/// normalised earliness (E - 1 - t_first) / (E - 1), 0 without spikes.
Decoded decode_latency(const SpikeTrain& output);

// -- rate --------------------------------------------------------------------

/// Independent Bernoulli(x) spikes in each exposure slot.
SpikeTrain encode_rate(const Grid<float>& values, int exposure, std::uint64_t seed);
Grid<double> encode_target_rate(const Grid<std::uint8_t>& mask, int exposure, double high = 0.8, double low = 0.2);
/// Flag iff spike count / E > threshold; score is the firing rate.
Decoded decode_rate(const SpikeTrain& output, double threshold = 0.75);

// -- delta modulation ----------------------------------------------------------

/// 2F channels, E = 1. Channel c spikes when x[t] - x[t-1] >= threshold,
/// channel F + c when it is <= -threshold; x[-1] is taken as 0.
SpikeTrain encode_delta(const Grid<float>& values, double threshold);
/// Channel c spikes where the mask turns on, F + c where it turns off.
SpikeTrain encode_target_delta(const Grid<std::uint8_t>& mask);
/// Latch per channel: an upper-half spike sets the flag, a lower-half spike
/// clears it (clear wins when both fire in one step).
Decoded decode_delta(const SpikeTrain& output);

// -- step forward ------------------------------------------------------------

/// Step-forward polarity trace of one signal: +1, -1 or 0 per time step.
/// The running base starts at 0 and moves by +/- threshold on each spike.
std::vector<int> step_forward_trace(std::span<const double> signal, double threshold, double* final_base = nullptr);
SpikeTrain encode_step_forward(const Grid<float>& values, double threshold, StepForwardMode mode, int exposure);
Decoded decode_step_forward(const SpikeTrain& output);

// -- dispatch ----------------------------------------------------------------

/// Encodes patch values with the configured method. `stream` selects an
/// independent random stream for rate encoding (e.g. the patch index).
SpikeTrain encode_input(const Grid<float>& values, const EncodingConfig& cfg, std::uint64_t stream = 0);
Target encode_target(const Grid<std::uint8_t>& mask, const EncodingConfig& cfg);
Decoded decode_output(const SpikeTrain& output, const EncodingConfig& cfg);

/// Raster image: one row per channel, T * E columns, 255 for a spike.
Grid<std::uint8_t> raster_image(const SpikeTrain& train);
/// Binary portable graymap (P5) of raster_image().
void write_raster_pgm(const std::filesystem::path& path, const SpikeTrain& train);

}  // namespace snnrfi
