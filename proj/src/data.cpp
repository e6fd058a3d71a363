#include "snnrfi/data.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "snnrfi/errors.hpp"

namespace snnrfi {

void Spectrogram::validate() const {
    if (values.rows() == 0 || values.cols() == 0) {
        throw DataError("spectrogram has an empty shape");
    }
    for (float v : values.data()) {
        if (!std::isfinite(v)) throw DataError("spectrogram contains a non-finite value");
        if (v < 0.0f) throw DataError("spectrogram contains a negative magnitude");
    }
}

std::size_t RFIMask::count() const noexcept {
    return static_cast<std::size_t>(std::count_if(flags.data().begin(), flags.data().end(),
                                                  [](std::uint8_t f) { return f != 0; }));
}

Spectrogram normalize(const Spectrogram& spec) {
    spec.validate();
    std::vector<double> logged(spec.values.size());
    std::transform(spec.values.data().begin(), spec.values.data().end(), logged.begin(),
                   [](float v) { return std::log1p(static_cast<double>(v)); });
    const auto [lo, hi] = std::minmax_element(logged.begin(), logged.end());
    const double min = *lo;
    const double range = *hi - *lo;

    Spectrogram out = spec;
    auto& dst = out.values.data();
    for (std::size_t i = 0; i < logged.size(); ++i) {
        dst[i] = range > 0.0 ? static_cast<float>((logged[i] - min) / range) : 0.0f;
    }
    return out;
}

std::vector<Patch> make_patches(const Spectrogram& spec, const RFIMask& mask, std::size_t patch_size) {
    if (patch_size == 0) throw std::invalid_argument("patch size must be positive");
    if (!mask.flags.same_shape(spec.values)) {
        throw DataError("mask shape does not match spectrogram shape");
    }
    const std::size_t rows = spec.values.rows();
    const std::size_t cols = spec.values.cols();
    const std::size_t n_f = (rows + patch_size - 1) / patch_size;
    const std::size_t n_t = (cols + patch_size - 1) / patch_size;

    std::vector<Patch> patches;
    patches.reserve(n_f * n_t);
    for (std::size_t pf = 0; pf < n_f; ++pf) {
        for (std::size_t pt = 0; pt < n_t; ++pt) {
            Patch p{Grid<float>(patch_size, patch_size, 0.0f), Grid<std::uint8_t>(patch_size, patch_size, 0),
                    Grid<std::uint8_t>(patch_size, patch_size, 1), pf * patch_size, pt * patch_size};
            for (std::size_t f = 0; f < patch_size; ++f) {
                const std::size_t src_f = p.origin_freq + f;
                if (src_f >= rows) break;
                for (std::size_t t = 0; t < patch_size; ++t) {
                    const std::size_t src_t = p.origin_time + t;
                    if (src_t >= cols) break;
                    p.values(f, t) = spec.values(src_f, src_t);
                    p.flags(f, t) = mask.flags(src_f, src_t) ? 1 : 0;
                    p.ignore(f, t) = 0;
                }
            }
            patches.push_back(std::move(p));
        }
    }
    return patches;
}

template <typename T>
Grid<T> stitch_grid(std::size_t rows, std::size_t cols, std::span<const Tile<T>> tiles) {
    if (rows == 0 || cols == 0) throw std::invalid_argument("stitch: empty parent shape");
    Grid<T> out(rows, cols, T{});
    Grid<std::uint8_t> covered(rows, cols, 0);
    for (const auto& tile : tiles) {
        if (tile.origin_freq >= rows || tile.origin_time >= cols) {
            throw ConsistencyError("stitch: tile origin (" + std::to_string(tile.origin_freq) + ", " +
                                   std::to_string(tile.origin_time) + ") lies outside the parent");
        }
        const std::size_t f_end = std::min(rows, tile.origin_freq + tile.values.rows());
        const std::size_t t_end = std::min(cols, tile.origin_time + tile.values.cols());
        for (std::size_t f = tile.origin_freq; f < f_end; ++f) {
            for (std::size_t t = tile.origin_time; t < t_end; ++t) {
                if (covered(f, t)) {
                    throw ConsistencyError("stitch: overlapping tiles at (" + std::to_string(f) + ", " +
                                           std::to_string(t) + ")");
                }
                covered(f, t) = 1;
                out(f, t) = tile.values(f - tile.origin_freq, t - tile.origin_time);
            }
        }
    }
    if (std::find(covered.data().begin(), covered.data().end(), 0) != covered.data().end()) {
        throw ConsistencyError("stitch: tiles leave part of the parent uncovered");
    }
    return out;
}

template Grid<std::uint8_t> stitch_grid<std::uint8_t>(std::size_t, std::size_t,
                                                      std::span<const Tile<std::uint8_t>>);
template Grid<double> stitch_grid<double>(std::size_t, std::size_t, std::span<const Tile<double>>);
template Grid<float> stitch_grid<float>(std::size_t, std::size_t, std::span<const Tile<float>>);

RFIMask stitch(std::size_t rows, std::size_t cols, std::span<const Tile<std::uint8_t>> tiles) {
    return RFIMask{stitch_grid<std::uint8_t>(rows, cols, tiles)};
}

double contamination_stats(std::span<const RFIMask> masks) {
    return contamination_stats(masks, {});
}

double contamination_stats(std::span<const RFIMask> masks, std::span<const Grid<std::uint8_t>> ignore) {
    if (masks.empty()) throw std::invalid_argument("contamination_stats: empty dataset");
    if (!ignore.empty() && ignore.size() != masks.size()) {
        throw std::invalid_argument("contamination_stats: ignore list does not match masks");
    }
    std::size_t flagged = 0;
    std::size_t total = 0;
    for (std::size_t i = 0; i < masks.size(); ++i) {
        const auto& flags = masks[i].flags.data();
        for (std::size_t k = 0; k < flags.size(); ++k) {
            if (!ignore.empty() && ignore[i].data()[k]) continue;
            ++total;
            flagged += flags[k] ? 1 : 0;
        }
    }
    if (total == 0) throw std::invalid_argument("contamination_stats: no unignored pixels");
    return static_cast<double>(flagged) / static_cast<double>(total);
}

}  // namespace snnrfi
