#pragma once

#include <cstdint>
#include <filesystem>
#include <utility>

#include "snnrfi/dataset_io.hpp"

namespace snnrfi {

/// Expected number of events of each RFI class per spectrogram.
struct RfiRates {
    double narrowband_persistent = 1.0;  // channel band spanning all time
    double broadband_transient = 0.5;    // time column(s) spanning all channels
    double narrowband_transient = 2.0;   // band partially covering time
    double blip = 6.0;                   // rectangle of at most 3x3

    bool all_zero() const noexcept {
        return narrowband_persistent == 0 && broadband_transient == 0 && narrowband_transient == 0 && blip == 0;
    }
};

struct GeneratorConfig {
    std::size_t n_train = 40;
    std::size_t n_test = 10;
    std::size_t freq_channels = 128;
    std::size_t time_steps = 128;
    std::pair<double, double> background_gradient_range{0.05, 0.2};
    double noise_sigma = 0.05;
    RfiRates rfi_rates;
    /// Log-normal event amplitude: exp(N(log(amplitude_median), amplitude_log_sigma)).
    double amplitude_median = 1e4;
    double amplitude_log_sigma = 0.3;
    double target_contamination = 0.0276;
    /// Accepted absolute deviation of the measured contamination from the target.
    double contamination_tolerance = 0.01;
    int max_retries = 24;
    std::uint64_t seed = 0;

    /// Throws ConfigError when a field is out of range.
    void validate() const;
};

/// Builds the dataset in memory. Event counts are rescaled until the pooled
/// contamination lands within tolerance of the target; throws
/// GenerationError when that does not happen within max_retries.
Dataset generate_dataset(const GeneratorConfig& cfg);

/// generate_dataset() followed by save_dataset() into `out_dir`.
DatasetManifest generate_synthetic(const GeneratorConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace snnrfi
