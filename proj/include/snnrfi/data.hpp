#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "snnrfi/grid.hpp"

namespace snnrfi {

/// Magnitude image over frequency x time for a single baseline.
struct Spectrogram {
    Grid<float> values;  // [freq_channels x time_steps]
    double freq_start_mhz = 105.0;
    double freq_end_mhz = 195.0;
    double integration_seconds = 3.52;
    std::int64_t baseline_id = 0;

    std::size_t freq_channels() const noexcept { return values.rows(); }
    std::size_t time_steps() const noexcept { return values.cols(); }

    /// Throws DataError on empty shape, negative or non-finite entries.
    void validate() const;
};

/// Boolean RFI flags aligned with a Spectrogram. Stored as 0/1 bytes.
struct RFIMask {
    Grid<std::uint8_t> flags;

    std::size_t count() const noexcept;
    friend bool operator==(const RFIMask&, const RFIMask&) = default;
};

/// A PxP tile cut out of a spectrogram/mask pair. Pixels outside the parent
/// are zero valued, unflagged and marked in `ignore`.
struct Patch {
    Grid<float> values;
    Grid<std::uint8_t> flags;
    Grid<std::uint8_t> ignore;
    std::size_t origin_freq = 0;
    std::size_t origin_time = 0;

    std::size_t size() const noexcept { return values.rows(); }
};

/// log1p followed by per-spectrogram min-max scaling into [0, 1]. A constant
/// spectrogram maps to all zeros. Metadata is carried over unchanged.
Spectrogram normalize(const Spectrogram& spec);

/// Row-major tiling into PxP patches, zero padding the trailing edge.
std::vector<Patch> make_patches(const Spectrogram& spec, const RFIMask& mask, std::size_t patch_size);

/// A predicted tile at a known origin, as consumed by stitch().
template <typename T>
struct Tile {
    std::size_t origin_freq = 0;
    std::size_t origin_time = 0;
    Grid<T> values;
};

/// Reassemble tiles into a parent of the given shape, dropping padding.
/// Throws ConsistencyError on overlaps, holes or misaligned tiles.
template <typename T>
Grid<T> stitch_grid(std::size_t rows, std::size_t cols, std::span<const Tile<T>> tiles);

RFIMask stitch(std::size_t rows, std::size_t cols, std::span<const Tile<std::uint8_t>> tiles);

/// Fraction of flagged pixels over all mask pixels. Pixels set in the optional
/// matching `ignore` grids are excluded. Throws std::invalid_argument when empty.
double contamination_stats(std::span<const RFIMask> masks);
double contamination_stats(std::span<const RFIMask> masks, std::span<const Grid<std::uint8_t>> ignore);

}  // namespace snnrfi
