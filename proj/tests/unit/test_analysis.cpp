#include "doctest.h"

#include "fixture.hpp"
#include "mge/analysis.hpp"
#include "mge/errors.hpp"
#include "mge/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace mge;
using mge::testing::desk;

TEST_CASE("band ranges split the index space in thirds") {
    CHECK(band_range(FrequencyBand::low, 9) == std::pair<std::size_t, std::size_t>{0, 3});
    CHECK(band_range(FrequencyBand::mid, 9) == std::pair<std::size_t, std::size_t>{3, 6});
    CHECK(band_range(FrequencyBand::high, 10) == std::pair<std::size_t, std::size_t>{6, 10});
    CHECK(parse_band("mid") == FrequencyBand::mid);
    CHECK_THROWS_AS(parse_band("ultra"), ConfigError);
}

TEST_CASE("zero-fill decay starts at the base accuracy and matches a direct fill") {
    const auto& f = desk();
    const std::vector<double> fractions{0.0, 0.1, 0.3};
    const auto curve = zero_fill_decay(f.base, f.spec, f.data.test, fractions);
    REQUIRE(curve.size() == 3);
    CHECK(curve[0].second == evaluate_accuracy(f.spec, f.base, f.data.test));

    // Oracle for f = 0.3: zero the floor(0.3 n) smallest-|c| coefficients.
    ParamSet filled = f.base;
    for (auto& t : filled.tensors()) {
        Vec c = dct2(t.values);
        std::vector<std::size_t> idx(c.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return c[a] * c[a] > c[b] * c[b]; });
        const auto count = static_cast<std::size_t>(std::floor(0.3 * static_cast<double>(c.size()) + 1e-9));
        for (std::size_t k = 0; k < count; ++k) c[idx[c.size() - 1 - k]] = 0.0;
        t.values = idct2(c);
    }
    CHECK(curve[2].second == storage_accuracy(f.spec, filled, f.data.test));

    CHECK_THROWS_AS(zero_fill_decay(f.base, f.spec, f.data.test, {0.3, 0.1}), ConfigError);
    CHECK_THROWS_AS(zero_fill_decay(f.base, f.spec, f.data.test, {1.5}), ConfigError);
}

TEST_CASE("unimportant mask marks ceil(fraction * n) positions") {
    RngStream rng(4);
    Vec layer(40);
    for (auto& v : layer) v = rng.uniform01() - 0.5;
    for (auto band : {FrequencyBand::low, FrequencyBand::mid, FrequencyBand::high}) {
        const auto mask = unimportant_mask_spatial(layer, band, 0.25);
        CHECK(std::count(mask.begin(), mask.end(), 1) == 10);
    }
    CHECK_THROWS_AS(unimportant_mask_spatial(layer, FrequencyBand::low, 0.0), ConfigError);
    CHECK_THROWS_AS(unimportant_mask_spatial(Vec(8, 0.0), FrequencyBand::low, 0.5), DegenerateSpectrumError);
}

TEST_CASE("band sensitivity with zero noise is the base accuracy") {
    const auto& f = desk();
    const double base = evaluate_accuracy(f.spec, f.base, f.data.test);
    const auto r = band_sensitivity(f.base, f.spec, f.data.test, {{0.0, 0.5}, {0.5, 1.0}}, 0.0, 1);
    REQUIRE(r.size() == 2);
    CHECK(r[0].accuracy == base);
    CHECK(r[1].accuracy == base);
    const auto noisy = band_sensitivity(f.base, f.spec, f.data.test, {{0.0, 0.5}}, 0.2, 1);
    CHECK(noisy[0].accuracy == band_sensitivity(f.base, f.spec, f.data.test, {{0.0, 0.5}}, 0.2, 1)[0].accuracy);
    CHECK_THROWS_AS(band_sensitivity(f.base, f.spec, f.data.test, {{0.0, 0.6}, {0.5, 1.0}}, 0.1, 1), ConfigError);
    CHECK_THROWS_AS(band_sensitivity(f.base, f.spec, f.data.test, {{0.0, 0.5}}, -1.0, 1), ConfigError);
}
