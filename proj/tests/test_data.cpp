#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"
#include "snnrfi/data.hpp"
#include "snnrfi/errors.hpp"

using namespace snnrfi;

namespace {

Spectrogram spec_of(std::size_t rows, std::size_t cols, std::uint64_t seed, float scale = 100.0f) {
    Spectrogram s;
    s.values = test::random_values(rows, cols, seed);
    for (auto& v : s.values.data()) v *= scale;
    return s;
}

RFIMask mask_of(std::size_t rows, std::size_t cols, std::uint64_t seed) {
    return RFIMask{test::random_mask(rows, cols, 0.2, seed)};
}

std::vector<Tile<std::uint8_t>> tiles_of(const std::vector<Patch>& patches) {
    std::vector<Tile<std::uint8_t>> tiles;
    for (const auto& p : patches) tiles.push_back({p.origin_freq, p.origin_time, p.flags});
    return tiles;
}

}  // namespace

TEST_CASE("normalize") {
    SUBCASE("constant spectrogram maps to zeros") {
        Spectrogram s;
        s.values = Grid<float>(4, 5, 5.0f);
        const auto n = normalize(s);
        CHECK(std::all_of(n.values.data().begin(), n.values.data().end(), [](float v) { return v == 0.0f; }));
    }
    SUBCASE("log1p endpoints") {
        Spectrogram s;
        s.values = Grid<float>(1, 2, 0.0f);
        s.values(0, 1) = static_cast<float>(std::exp(1.0) - 1.0);
        const auto n = normalize(s);
        CHECK(n.values(0, 0) == doctest::Approx(0.0));
        CHECK(n.values(0, 1) == doctest::Approx(1.0));
    }
    SUBCASE("matches a two-pass min/max oracle") {
        const Spectrogram s = spec_of(3, 3, 21);
        double lo = 1e300, hi = -1e300;
        for (std::size_t r = 0; r < 3; ++r)
            for (std::size_t c = 0; c < 3; ++c) {
                lo = std::min(lo, std::log1p(double(s.values(r, c))));
                hi = std::max(hi, std::log1p(double(s.values(r, c))));
            }
        const auto n = normalize(s);
        for (std::size_t r = 0; r < 3; ++r)
            for (std::size_t c = 0; c < 3; ++c)
                CHECK(n.values(r, c) == doctest::Approx((std::log1p(double(s.values(r, c))) - lo) / (hi - lo)).epsilon(1e-6));
    }
    SUBCASE("output in [0,1] and pixel order preserved") {
        const Spectrogram s = spec_of(16, 16, 4, 1e4f);
        const auto n = normalize(s);
        for (std::size_t i = 0; i < s.values.size(); ++i) {
            CHECK(n.values.data()[i] >= 0.0f);
            CHECK(n.values.data()[i] <= 1.0f);
            for (std::size_t j = 0; j < 8; ++j)
                if (s.values.data()[i] < s.values.data()[j]) CHECK(n.values.data()[i] <= n.values.data()[j]);
        }
    }
    SUBCASE("non-finite input is rejected") {
        Spectrogram s;
        s.values = Grid<float>(2, 2, 1.0f);
        s.values(1, 1) = NAN;
        CHECK_THROWS_AS(normalize(s), DataError);
    }
}

TEST_CASE("patch tiling") {
    SUBCASE("64x64 gives four row-major patches") {
        const auto p = make_patches(spec_of(64, 64, 1), mask_of(64, 64, 2), 32);
        REQUIRE(p.size() == 4);
        CHECK(p[0].origin_freq == 0);
        CHECK(p[0].origin_time == 0);
        CHECK(p[1].origin_freq == 0);
        CHECK(p[1].origin_time == 32);
        CHECK(p[2].origin_freq == 32);
        CHECK(p[2].origin_time == 0);
        CHECK(p[3].origin_freq == 32);
        CHECK(p[3].origin_time == 32);
    }
    SUBCASE("512x512 gives 256 patches") {
        Spectrogram s;
        s.values = Grid<float>(512, 512, 1.0f);
        CHECK(make_patches(s, RFIMask{Grid<std::uint8_t>(512, 512, 0)}, 32).size() == 256);
    }
    SUBCASE("33x33 pads and marks 31-pixel margins") {
        const auto p = make_patches(spec_of(33, 33, 3), mask_of(33, 33, 4), 32);
        REQUIRE(p.size() == 4);
        // Right tile keeps one real column, bottom tile one real row.
        std::size_t ignored_right = 0;
        for (auto v : p[1].ignore.data()) ignored_right += v;
        CHECK(ignored_right == 32 * 31);
        std::size_t ignored_corner = 0;
        for (auto v : p[3].ignore.data()) ignored_corner += v;
        CHECK(ignored_corner == 32 * 32 - 1);
        for (std::size_t r = 0; r < 32; ++r)
            for (std::size_t c = 1; c < 32; ++c) {
                CHECK(p[1].values(r, c) == 0.0f);
                CHECK(p[1].flags(r, c) == 0);
            }
    }
    SUBCASE("patch values reconstruct the input") {
        const auto s = spec_of(64, 96, 5);
        const auto p = make_patches(s, mask_of(64, 96, 6), 32);
        for (const auto& patch : p)
            for (std::size_t r = 0; r < 32; ++r)
                for (std::size_t c = 0; c < 32; ++c)
                    CHECK(patch.values(r, c) == s.values(patch.origin_freq + r, patch.origin_time + c));
    }
    SUBCASE("zero patch size is an argument error") {
        CHECK_THROWS_AS(make_patches(spec_of(4, 4, 1), mask_of(4, 4, 1), 0), std::invalid_argument);
    }
}

TEST_CASE("stitch") {
    SUBCASE("round trip for divisible and padded shapes") {
        for (auto [rows, cols] : {std::pair<std::size_t, std::size_t>{64, 64}, {96, 32}, {33, 70}, {5, 7}}) {
            const RFIMask m = mask_of(rows, cols, rows * 131 + cols);
            const auto patches = make_patches(spec_of(rows, cols, 9), m, 32);
            const auto tiles = tiles_of(patches);
            CHECK(stitch(rows, cols, tiles) == m);
        }
    }
    SUBCASE("single tile is the identity") {
        const RFIMask m = mask_of(32, 32, 12);
        const auto tiles = tiles_of(make_patches(spec_of(32, 32, 1), m, 32));
        REQUIRE(tiles.size() == 1);
        CHECK(stitch(32, 32, tiles) == m);
    }
    SUBCASE("tile order does not matter") {
        const RFIMask m = mask_of(96, 64, 13);
        auto tiles = tiles_of(make_patches(spec_of(96, 64, 1), m, 32));
        std::mt19937 rng(4);
        std::shuffle(tiles.begin(), tiles.end(), rng);
        CHECK(stitch(96, 64, tiles) == m);
    }
    SUBCASE("overlapping or missing tiles") {
        auto tiles = tiles_of(make_patches(spec_of(64, 64, 1), mask_of(64, 64, 1), 32));
        auto missing = tiles;
        missing.pop_back();
        CHECK_THROWS_AS(stitch(64, 64, missing), ConsistencyError);
        auto overlap = tiles;
        overlap[3] = overlap[0];
        CHECK_THROWS_AS(stitch(64, 64, overlap), ConsistencyError);
    }
}

TEST_CASE("contamination_stats") {
    std::vector<RFIMask> masks{RFIMask{Grid<std::uint8_t>(10, 10, 0)}};
    CHECK(contamination_stats(masks) == 0.0);
    masks[0].flags(3, 4) = 1;
    CHECK(contamination_stats(masks) == doctest::Approx(0.01));
    CHECK_THROWS_AS(contamination_stats(std::span<const RFIMask>{}), std::invalid_argument);

    SUBCASE("ignored pixels are excluded") {
        std::vector<Grid<std::uint8_t>> ignore{Grid<std::uint8_t>(10, 10, 0)};
        for (std::size_t c = 0; c < 10; ++c)
            for (std::size_t r = 5; r < 10; ++r) ignore[0](r, c) = 1;
        CHECK(contamination_stats(masks, ignore) == doctest::Approx(0.02));
    }
}

TEST_CASE("spectrogram validation") {
    Spectrogram s;
    CHECK_THROWS_AS(s.validate(), DataError);
    s.values = Grid<float>(2, 2, 1.0f);
    CHECK_NOTHROW(s.validate());
    s.values(0, 0) = -1.0f;
    CHECK_THROWS_AS(s.validate(), DataError);
}
