#include "mge/analysis.hpp"

#include "mge/errors.hpp"
#include "mge/generator.hpp"
#include "mge/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mge {

namespace {

// Guards the count computations against fractions like 0.3 * 10 landing a hair off an integer.
constexpr double kCountSlack = 1e-9;

std::size_t ceil_count(double fraction, std::size_t n) {
    const double v = std::ceil(fraction * static_cast<double>(n) - kCountSlack);
    return std::min(n, static_cast<std::size_t>(std::max(0.0, v)));
}

std::size_t floor_count(double fraction, std::size_t n) {
    const double v = std::floor(fraction * static_cast<double>(n) + kCountSlack);
    return std::min(n, static_cast<std::size_t>(std::max(0.0, v)));
}

} // namespace

FrequencyBand parse_band(const std::string& name) {
    if (name == "low") return FrequencyBand::low;
    if (name == "mid") return FrequencyBand::mid;
    if (name == "high") return FrequencyBand::high;
    throw ConfigError("unknown frequency band '" + name + "'");
}

const char* band_name(FrequencyBand b) noexcept {
    switch (b) {
    case FrequencyBand::low: return "low";
    case FrequencyBand::mid: return "mid";
    case FrequencyBand::high: return "high";
    }
    return "?";
}

std::pair<std::size_t, std::size_t> band_range(FrequencyBand b, std::size_t n) {
    const std::size_t a = n / 3, c = 2 * n / 3;
    switch (b) {
    case FrequencyBand::low: return {0, a};
    case FrequencyBand::mid: return {a, c};
    case FrequencyBand::high: return {c, n};
    }
    return {0, 0};
}

std::vector<std::uint8_t> unimportant_mask_spatial(std::span<const double> layer, FrequencyBand band, double fraction) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw ConfigError("mask fraction must lie in (0, 1)");
    const Vec coeffs = dct2(layer);
    if (std::all_of(coeffs.begin(), coeffs.end(), [](double v) { return v == 0.0; }))
        throw DegenerateSpectrumError("unimportant_mask_spatial: all-zero layer");

    const auto [lo, hi] = band_range(band, coeffs.size());
    std::vector<std::size_t> in_band(hi - lo);
    std::iota(in_band.begin(), in_band.end(), lo);
    std::stable_sort(in_band.begin(), in_band.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(coeffs[a]) < std::abs(coeffs[b]); });

    // The spatial change is the inverse transform of the removed coefficients,
    // so an already-zero band yields an exactly zero change.
    Vec removed(coeffs.size(), 0.0);
    const std::size_t zeroed = ceil_count(fraction, in_band.size());
    for (std::size_t i = 0; i < zeroed; ++i) removed[in_band[i]] = -coeffs[in_band[i]];
    const Vec delta = idct2(removed);

    std::vector<std::size_t> order(delta.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(delta[a]) > std::abs(delta[b]); });
    std::vector<std::uint8_t> mask(delta.size(), 0);
    const std::size_t marked = ceil_count(fraction, delta.size());
    for (std::size_t i = 0; i < marked; ++i) mask[order[i]] = 1;
    return mask;
}

std::vector<std::pair<double, double>> zero_fill_decay(const ParamSet& base, const NetworkSpec& spec,
                                                       const Dataset& testset, const std::vector<double>& fractions) {
    if (!std::is_sorted(fractions.begin(), fractions.end())) throw ConfigError("zero-fill fractions must be ascending");
    for (double f : fractions)
        if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("zero-fill fractions must lie in [0, 1]");

    std::vector<Vec> coeffs;
    std::vector<std::vector<std::size_t>> orders;
    for (const auto& t : base.tensors()) {
        coeffs.push_back(dct2(t.values));
        orders.push_back(energy_order(coeffs.back()));
    }
    std::vector<std::pair<double, double>> out;
    for (double f : fractions) {
        ParamSet filled = base;
        for (std::size_t i = 0; i < filled.size(); ++i) {
            const std::size_t n = coeffs[i].size();
            const std::size_t count = floor_count(f, n);
            if (count == 0) continue;
            Vec c = coeffs[i];
            for (std::size_t k = 0; k < count; ++k) c[orders[i][n - 1 - k]] = 0.0;
            filled[i].values = idct2(c);
        }
        out.emplace_back(f, storage_accuracy(spec, filled, testset));
    }
    return out;
}

std::vector<BandResult> band_sensitivity(const ParamSet& base, const NetworkSpec& spec, const Dataset& testset,
                                         const std::vector<std::pair<double, double>>& bands, double scale,
                                         std::uint64_t seed) {
    if (!(scale >= 0.0)) throw ConfigError("band perturbation scale must be >= 0");
    auto sorted = bands;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (!(sorted[i].first >= 0.0 && sorted[i].first < sorted[i].second && sorted[i].second <= 1.0))
            throw ConfigError("each band needs 0 <= lo < hi <= 1");
        if (i > 0 && sorted[i].first < sorted[i - 1].second) throw ConfigError("frequency bands overlap");
    }

    const RngStream root(seed);
    std::vector<BandResult> out;
    for (std::size_t b = 0; b < bands.size(); ++b) {
        const auto [lo, hi] = bands[b];
        ParamSet perturbed = base;
        if (scale > 0.0) {
            for (std::size_t i = 0; i < perturbed.size(); ++i) {
                const std::size_t n = perturbed[i].values.size();
                const std::size_t first = floor_count(lo, n), last = floor_count(hi, n);
                if (first >= last) continue;
                RngStream rng = root.child({b, i});
                const Vec noise = sample_truncated_normal(scale, last - first, rng);
                Vec delta(n, 0.0);
                std::copy(noise.begin(), noise.end(), delta.begin() + static_cast<std::ptrdiff_t>(first));
                const Vec spatial = idct2(delta);
                for (std::size_t k = 0; k < n; ++k) perturbed[i].values[k] += spatial[k];
            }
        }
        out.push_back({lo, hi, storage_accuracy(spec, perturbed, testset)});
    }
    return out;
}

} // namespace mge
